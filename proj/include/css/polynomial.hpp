#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "json.hpp"

namespace css {

/// Dense polynomial in one complex variable, coefficient i multiplies z^i.
template <class Real>
class BasicPolynomial {
public:
    using scalar = std::complex<Real>;

    /// degree of the zero polynomial
    static constexpr long zero_degree = std::numeric_limits<long>::min();

    BasicPolynomial() = default;
    explicit BasicPolynomial(std::vector<scalar> coeffs) : c_(std::move(coeffs)) { trim(); }
    BasicPolynomial(std::initializer_list<scalar> coeffs) : c_(coeffs) { trim(); }

    static BasicPolynomial constant(scalar a) { return BasicPolynomial({a}); }
    static BasicPolynomial monomial(std::size_t n, scalar a = scalar(1)) {
        std::vector<scalar> v(n + 1, scalar(0));
        v[n] = a;
        return BasicPolynomial(std::move(v));
    }
    /// (z - z0)^n
    static BasicPolynomial shifted_power(scalar z0, std::size_t n) {
        BasicPolynomial r = constant(1);
        BasicPolynomial lin({-z0, scalar(1)});
        for (std::size_t k = 0; k < n; ++k) r = r * lin;
        return r;
    }

    bool is_zero() const { return c_.empty(); }
    long degree() const { return c_.empty() ? zero_degree : static_cast<long>(c_.size()) - 1; }
    const std::vector<scalar>& coeffs() const { return c_; }
    std::size_t size() const { return c_.size(); }
    scalar operator[](std::size_t i) const { return i < c_.size() ? c_[i] : scalar(0); }
    scalar leading() const { return c_.empty() ? scalar(0) : c_.back(); }

    Real norm() const {
        Real s = 0;
        for (auto& a : c_) s += std::norm(a);
        return std::sqrt(s);
    }

    scalar operator()(scalar z) const {
        scalar acc(0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
        return acc;
    }

    /// zero out coefficients with modulus below tol * norm(), then trim
    BasicPolynomial chopped(Real rel_tol) const {
        Real cut = rel_tol * norm();
        std::vector<scalar> v = c_;
        for (auto& a : v)
            if (std::abs(a) <= cut) a = scalar(0);
        return BasicPolynomial(std::move(v));
    }

    BasicPolynomial monic() const {
        if (is_zero()) throw std::domain_error("monic of zero polynomial");
        BasicPolynomial r = *this * (scalar(1) / leading());
        r.c_.back() = scalar(1);
        return r;
    }

    friend BasicPolynomial operator+(const BasicPolynomial& a, const BasicPolynomial& b) {
        std::vector<scalar> v(std::max(a.size(), b.size()), scalar(0));
        for (std::size_t i = 0; i < a.size(); ++i) v[i] += a.c_[i];
        for (std::size_t i = 0; i < b.size(); ++i) v[i] += b.c_[i];
        return BasicPolynomial(std::move(v));
    }
    friend BasicPolynomial operator-(const BasicPolynomial& a) { return a * scalar(-1); }
    friend BasicPolynomial operator-(const BasicPolynomial& a, const BasicPolynomial& b) { return a + (-b); }
    friend BasicPolynomial operator*(const BasicPolynomial& a, scalar s) {
        std::vector<scalar> v = a.c_;
        for (auto& x : v) x *= s;
        return BasicPolynomial(std::move(v));
    }
    friend BasicPolynomial operator*(scalar s, const BasicPolynomial& a) { return a * s; }
    friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<scalar> v(a.size() + b.size() - 1, scalar(0));
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) v[i + j] += a.c_[i] * b.c_[j];
        return BasicPolynomial(std::move(v));
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == scalar(0)) c_.pop_back();
    }
    std::vector<scalar> c_;
};

using Polynomial = BasicPolynomial<double>;
using cplx = std::complex<double>;

template <class Real>
std::complex<Real> evaluate(const BasicPolynomial<Real>& p, std::complex<Real> z) {
    return p(z);
}

template <class Real>
BasicPolynomial<Real> derivative(const BasicPolynomial<Real>& p) {
    if (p.size() <= 1) return {};
    std::vector<std::complex<Real>> v(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i) v[i - 1] = p[i] * Real(i);
    return BasicPolynomial<Real>(std::move(v));
}

/// z -> p(a z)
template <class Real>
BasicPolynomial<Real> rescaled(const BasicPolynomial<Real>& p, std::complex<Real> a) {
    std::vector<std::complex<Real>> v(p.coeffs());
    std::complex<Real> f(1);
    for (auto& c : v) {
        c *= f;
        f *= a;
    }
    return BasicPolynomial<Real>(std::move(v));
}

/// antiderivative with zero constant term
template <class Real>
BasicPolynomial<Real> integral(const BasicPolynomial<Real>& p) {
    if (p.is_zero()) return {};
    std::vector<std::complex<Real>> v(p.size() + 1, Real(0));
    for (std::size_t i = 0; i < p.size(); ++i) v[i + 1] = p[i] / Real(i + 1);
    return BasicPolynomial<Real>(std::move(v));
}

/// W(P,Q) = P'Q - PQ'. Cancellation residue below rounding level is dropped.
template <class Real>
BasicPolynomial<Real> wronskian(const BasicPolynomial<Real>& P, const BasicPolynomial<Real>& Q) {
    BasicPolynomial<Real> w = derivative(P) * Q - P * derivative(Q);
    Real n = Real(std::max(P.size(), Q.size()) + 1);
    Real cut = 16 * n * std::numeric_limits<Real>::epsilon() * P.norm() * Q.norm() * n;
    std::vector<std::complex<Real>> v = w.coeffs();
    for (auto& a : v)
        if (std::abs(a) <= cut) a = Real(0);
    return BasicPolynomial<Real>(std::move(v));
}

/// quotient and remainder of a / b
template <class Real>
std::pair<BasicPolynomial<Real>, BasicPolynomial<Real>> divmod(const BasicPolynomial<Real>& a,
                                                               const BasicPolynomial<Real>& b) {
    if (b.is_zero()) throw std::domain_error("division by zero polynomial");
    if (a.degree() < b.degree()) return {BasicPolynomial<Real>{}, a};
    std::vector<std::complex<Real>> r = a.coeffs();
    std::size_t db = b.size() - 1;
    std::vector<std::complex<Real>> q(r.size() - db, Real(0));
    for (std::size_t k = q.size(); k-- > 0;) {
        std::complex<Real> t = r[k + db] / b.leading();
        q[k] = t;
        for (std::size_t j = 0; j <= db; ++j) r[k + j] -= t * b[j];
        r[k + db] = Real(0);
    }
    r.resize(db);
    return {BasicPolynomial<Real>(std::move(q)), BasicPolynomial<Real>(std::move(r))};
}

inline constexpr double default_gcd_tol = 1e-9;

/// Monic gcd by Euclidean remainders. Remainder coefficients below rel_tol times the
/// current divisor norm are treated as zero, so the result is only as good as that cut.
template <class Real>
BasicPolynomial<Real> gcd(BasicPolynomial<Real> a, BasicPolynomial<Real> b, Real rel_tol = Real(default_gcd_tol)) {
    if (a.is_zero() && b.is_zero()) throw std::domain_error("undefined gcd");
    if (a.is_zero()) return b.monic();
    if (b.is_zero()) return a.monic();
    a = a.monic();
    b = b.monic();
    if (a.degree() < b.degree()) std::swap(a, b);
    while (true) {
        auto r = divmod(a, b).second;
        Real scale = std::max(a.norm(), b.norm());
        std::vector<std::complex<Real>> v = r.coeffs();
        for (auto& x : v)
            if (std::abs(x) <= rel_tol * scale) x = Real(0);
        r = BasicPolynomial<Real>(std::move(v));
        if (r.is_zero()) return b.monic();
        a = b;
        b = r.monic();
    }
}

template <class Real>
bool coprime(const BasicPolynomial<Real>& a, const BasicPolynomial<Real>& b, Real rel_tol = Real(default_gcd_tol)) {
    return gcd(a, b, rel_tol).degree() == 0;
}

/// 2x2 complex matrix acting on coefficient pairs (P,Q) -> (aP + bQ, cP + dQ).
struct PairTransform {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();

    PairTransform() = default;
    explicit PairTransform(const Eigen::Matrix2cd& mat) : m(mat) {}
    PairTransform(cplx a, cplx b, cplx c, cplx d) { m << a, b, c, d; }

    cplx det() const { return m.determinant(); }

    bool is_unitary(double tol = 1e-10) const {
        return ((m.adjoint() * m) - Eigen::Matrix2cd::Identity()).norm() <= tol;
    }
    bool is_special_unitary(double tol = 1e-10) const { return is_unitary(tol) && std::abs(det() - 1.0) <= tol; }
    bool is_special_linear(double tol = 1e-10) const { return std::abs(det() - 1.0) <= tol; }
    /// c * U with c > 0 and U in SU(2)
    bool is_positive_scaled_su2(double tol = 1e-10) const {
        cplx d = det();
        if (std::abs(d.imag()) > tol * std::abs(d) || d.real() <= 0) return false;
        double c = std::sqrt(d.real());
        return PairTransform(m / c).is_special_unitary(tol);
    }

    PairTransform inverse() const { return PairTransform(m.inverse()); }
    friend PairTransform operator*(const PairTransform& x, const PairTransform& y) { return PairTransform(x.m * y.m); }
};

inline std::pair<Polynomial, Polynomial> act(const PairTransform& L, const std::pair<Polynomial, Polynomial>& pq) {
    const auto& [P, Q] = pq;
    return {L.m(0, 0) * P + L.m(0, 1) * Q, L.m(1, 0) * P + L.m(1, 1) * Q};
}

/// Random element of SU(2) from a uniform unit quaternion.
template <class Rng>
PairTransform random_su2(Rng& rng) {
    std::normal_distribution<double> g;
    double q[4];
    double n = 0;
    for (double& x : q) {
        x = g(rng);
        n += x * x;
    }
    n = std::sqrt(n);
    cplx a(q[0] / n, q[1] / n), b(q[2] / n, q[3] / n);
    return PairTransform(a, b, -std::conj(b), std::conj(a));
}

struct RootMultiplicity {
    cplx root;
    int multiplicity;
};

/// eigenvalues of the companion matrix of a polynomial of degree >= 1
inline std::vector<cplx> companion_roots(const Polynomial& p) {
    long n = p.degree();
    if (n < 1) return {};
    Polynomial m = p.monic();
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
    for (long i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    for (long i = 0; i < n; ++i) C(i, n - 1) = -m[static_cast<std::size_t>(i)];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
    return r;
}

/// Roots with multiplicities. A square-free split (repeated gcd with the derivative) runs
/// first so the companion eigenvalues are well conditioned; clusters closer than
/// 1e-6 (1 + |root|) are merged afterwards.
inline std::vector<RootMultiplicity> roots(const Polynomial& p, double cluster = 1e-6) {
    if (p.is_zero()) throw std::domain_error("roots of zero polynomial");
    std::vector<RootMultiplicity> out;
    // Yun's square-free decomposition
    Polynomial a = p.monic();
    if (a.degree() >= 1) {
        Polynomial b = derivative(a);
        Polynomial g = gcd(a, b);
        Polynomial c = divmod(a, g).first;
        Polynomial d = divmod(b, g).first - derivative(c);
        int mult = 1;
        while (c.degree() >= 1) {
            Polynomial gi = (d.norm() <= 1e-9 * c.norm()) ? c.monic() : gcd(c, d);
            for (auto z : companion_roots(gi)) out.push_back({z, mult});
            Polynomial cn = divmod(c, gi).first;
            Polynomial dn = divmod(d, gi).first - derivative(cn);
            c = cn;
            d = dn;
            ++mult;
            if (mult > 64) break;
        }
    }
    std::vector<RootMultiplicity> merged;
    for (auto& r : out) {
        bool hit = false;
        for (auto& m : merged) {
            if (std::abs(m.root - r.root) <= cluster * (1.0 + std::abs(m.root))) {
                m.multiplicity += r.multiplicity;
                hit = true;
                break;
            }
        }
        if (!hit) merged.push_back(r);
    }
    return merged;
}

// JSON: list of [re, im] pairs, low to high
inline nlohmann::json to_json(const Polynomial& p) {
    nlohmann::json j = nlohmann::json::array();
    for (auto& a : p.coeffs()) j.push_back({a.real(), a.imag()});
    if (p.is_zero()) j.push_back({0.0, 0.0});
    return j;
}

inline cplx complex_from_json(const nlohmann::json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw std::invalid_argument("complex number must be a number or [re, im]");
}

inline Polynomial polynomial_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("polynomial must be a list of [re, im] coefficients");
    std::vector<cplx> v;
    for (auto& e : j) v.push_back(complex_from_json(e));
    return Polynomial(std::move(v));
}

}  // namespace css
