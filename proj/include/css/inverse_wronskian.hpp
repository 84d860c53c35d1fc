#pragma once

#include "polynomial.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace css {

/// Pair (P,Q) with its cached Wronskian.
struct WronskianPair {
    Polynomial P, Q, W;
    bool coprime = false;
    bool independent = false;

    static WronskianPair make(const Polynomial& P, const Polynomial& Q) {
        WronskianPair w;
        w.P = P;
        w.Q = Q;
        w.W = wronskian(P, Q);
        w.independent = !w.W.is_zero();
        w.coprime = !(P.is_zero() && Q.is_zero()) && css::coprime(P, Q);
        return w;
    }
    /// rejects dependent or non-coprime input
    static WronskianPair validated(const Polynomial& P, const Polynomial& Q) {
        WronskianPair w = make(P, Q);
        if (!w.independent) throw std::invalid_argument("linearly dependent pair (zero Wronskian)");
        if (!w.coprime) throw std::invalid_argument("pair is not coprime");
        return w;
    }

    long max_degree() const { return std::max(P.degree(), Q.degree()); }
    std::pair<Polynomial, Polynomial> pq() const { return {P, Q}; }
};

enum class FamilyKind { SingleRoot, DegreeTwoPrimitive, DegreeTwoSplit, Generic };

inline std::string to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::SingleRoot: return "SingleRoot";
        case FamilyKind::DegreeTwoPrimitive: return "DegreeTwoPrimitive";
        case FamilyKind::DegreeTwoSplit: return "DegreeTwoSplit";
        case FamilyKind::Generic: return "Generic";
    }
    return "Generic";
}

struct SolutionFamily {
    FamilyKind kind = FamilyKind::Generic;
    std::vector<std::pair<std::string, cplx>> parameters;  // values used by the representative
    std::string constraint;
    WronskianPair representative;
    double residual = 0;  // ||W(P,Q) - f||
};

inline double wronskian_residual(const WronskianPair& w, const Polynomial& f) { return (w.W - f).norm(); }

/// Orbit representative under SL(2): deg P > deg Q, P monic, coefficient of P at
/// power deg Q equal to zero. The Wronskian is preserved. The applied transform is
/// written to `applied` when given.
inline WronskianPair canonical_form(const WronskianPair& in, PairTransform* applied = nullptr) {
    if (!in.independent) throw std::invalid_argument("canonical form needs an independent pair");
    Polynomial P = in.P, Q = in.Q;
    PairTransform T;
    if (P.degree() < Q.degree()) {
        std::swap(P, Q);
        Q = -Q;
        T = PairTransform(0, 1, -1, 0) * T;
    }
    if (P.degree() == Q.degree()) {
        cplx t = Q.leading() / P.leading();
        std::vector<cplx> v = (Q - t * P).coeffs();
        v.resize(static_cast<std::size_t>(P.degree()));
        // drop leading coefficients that are cancellation roundoff
        double floor = 1e-11 * (Q.norm() + std::abs(t) * P.norm());
        while (!v.empty() && std::abs(v.back()) <= floor) v.pop_back();
        Q = Polynomial(v);
        T = PairTransform(1, 0, -t, 1) * T;
    }
    cplx s = 1.0 / P.leading();
    {
        std::vector<cplx> v = (s * P).coeffs();
        v.back() = 1.0;
        P = Polynomial(v);
    }
    Q = Q * (1.0 / s);
    T = PairTransform(s, 0, 0, 1.0 / s) * T;
    if (!Q.is_zero()) {
        std::size_t k = static_cast<std::size_t>(Q.degree());
        cplx t = P[k] / Q.leading();
        std::vector<cplx> v = (P - t * Q).coeffs();
        v[k] = 0;
        P = Polynomial(v);
        T = PairTransform(1, -t, 0, 1) * T;
    }
    if (applied) *applied = T;
    WronskianPair out;
    out.P = P;
    out.Q = Q;
    out.W = wronskian(P, Q);
    out.independent = in.independent;
    out.coprime = in.coprime;
    return out;
}

inline bool coefficients_close(const Polynomial& a, const Polynomial& b, double tol) {
    // missing coefficients count as zero, so a roundoff-sized leading term does not change the verdict
    double scale = std::max({1.0, a.norm(), b.norm()});
    auto at = [](const Polynomial& p, std::size_t i) { return i < p.size() ? p[i] : cplx(0); };
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i)
        if (std::abs(at(a, i) - at(b, i)) > tol * scale) return false;
    return true;
}

inline bool same_canonical(const WronskianPair& a, const WronskianPair& b, double tol = 1e-8) {
    return coefficients_close(a.P, b.P, tol) && coefficients_close(a.Q, b.Q, tol);
}

/// f = a (z - z0)^n
inline SolutionFamily solve_single_root(cplx a, cplx z0, int n) {
    if (a == cplx(0)) throw std::invalid_argument("zero Wronskian target");
    if (n < 0) throw std::invalid_argument("negative exponent");
    SolutionFamily fam;
    fam.kind = FamilyKind::SingleRoot;
    cplx b2 = a / double(n + 1);
    fam.parameters = {{"alpha1", 1.0}, {"beta1", 0.0}, {"alpha2", 0.0}, {"beta2", b2}, {"z0", z0}};
    fam.constraint = "alpha1*beta2 - alpha2*beta1 = a/(n+1)";
    Polynomial P = Polynomial::shifted_power(z0, static_cast<std::size_t>(n + 1));
    fam.representative = WronskianPair::validated(P, Polynomial::constant(b2));
    Polynomial f = a * Polynomial::shifted_power(z0, static_cast<std::size_t>(n));
    fam.residual = wronskian_residual(fam.representative, f);
    return fam;
}

/// f = a z^2 + b z + c
inline std::vector<SolutionFamily> solve_degree_two(cplx a, cplx b, cplx c) {
    if (a == cplx(0)) throw std::invalid_argument("degree below two");
    Polynomial f{c, b, a};
    std::vector<SolutionFamily> out;
    SolutionFamily prim;
    prim.kind = FamilyKind::DegreeTwoPrimitive;
    prim.parameters = {{"a", a}, {"b", b}, {"c", c}};
    prim.constraint = "Lambda in SL(2)";
    prim.representative = WronskianPair::validated(Polynomial{0.0, c, b / 2.0, a / 3.0}, Polynomial::constant(1));
    prim.residual = wronskian_residual(prim.representative, f);
    out.push_back(prim);
    cplx disc = c - b * b / (4.0 * a);
    if (std::abs(disc) > 1e-12 * std::max({std::abs(a), std::abs(b), std::abs(c)})) {
        SolutionFamily split;
        split.kind = FamilyKind::DegreeTwoSplit;
        split.parameters = prim.parameters;
        split.constraint = "Lambda in SL(2)";
        split.representative = WronskianPair::validated(Polynomial{-c / a, 0.0, 1.0}, Polynomial{b / 2.0, a});
        split.residual = wronskian_residual(split.representative, f);
        out.push_back(split);
    }
    return out;
}

/// Matrix of y -> f y'' - f' y' + R y on the monomial basis z^0..z^max_deg.
inline Eigen::MatrixXcd ode_matrix(const Polynomial& f, const Polynomial& R, int max_deg) {
    Polynomial df = derivative(f);
    long rows = std::max({f.degree(), df.degree(), R.degree(), 0L}) + max_deg + 1;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(rows, max_deg + 1);
    for (int j = 0; j <= max_deg; ++j) {
        Polynomial y = Polynomial::monomial(static_cast<std::size_t>(j));
        Polynomial img = f * derivative(derivative(y)) - df * derivative(y) + R * y;
        for (std::size_t i = 0; i < img.size(); ++i) A(static_cast<long>(i), j) = img[i];
    }
    return A;
}

/// Polynomial solutions of f y'' - f' y' + R y = 0 with deg y <= max_deg, unit coefficient norm.
inline std::vector<Polynomial> ode_kernel(const Polynomial& f, const Polynomial& R, int max_deg,
                                          double rel_tol = 1e-9) {
    if (f.is_zero()) throw std::invalid_argument("zero polynomial f");
    if (max_deg < 0 || max_deg > f.degree() + 1) throw std::invalid_argument("max_deg exceeds deg f + 1");
    Eigen::MatrixXcd A = ode_matrix(f, R, max_deg);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    std::vector<Polynomial> out;
    long n = A.cols();
    for (long i = 0; i < n; ++i) {
        double si = i < s.size() ? s(i) : 0.0;
        if (si <= rel_tol * std::max(smax, 1e-300)) {
            Eigen::VectorXcd v = svd.matrixV().col(i);
            std::vector<cplx> c(v.data(), v.data() + v.size());
            out.push_back(Polynomial(c));
        }
    }
    return out;
}

struct GenericSearchOptions {
    int cap = 6;
    int starts_per_split = 48;
    int max_newton = 80;
    std::uint64_t seed = 42;
};

namespace detail {

inline long binomial(long n, long k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Unknowns for split (m,k): P = z^m + sum_{i<m, i!=k} p_i z^i, Q = sum_{i<=k} q_i z^i.
struct SplitLayout {
    int m, k;
    int size() const { return m + k; }  // p has m-1 free entries, q has k+1
    std::pair<Polynomial, Polynomial> unpack(const Eigen::VectorXcd& x) const {
        std::vector<cplx> p(static_cast<std::size_t>(m) + 1, 0.0), q(static_cast<std::size_t>(k) + 1, 0.0);
        int idx = 0;
        for (int i = 0; i < m; ++i)
            if (i != k) p[i] = x(idx++);
        p[m] = 1.0;
        for (int i = 0; i <= k; ++i) q[i] = x(idx++);
        return {Polynomial(p), Polynomial(q)};
    }
};

inline Eigen::VectorXcd residual_vec(const Polynomial& w, const Polynomial& f, int len) {
    Eigen::VectorXcd r(len);
    for (int i = 0; i < len; ++i) r(i) = w[i] - f[i];
    return r;
}

inline bool newton_split(const SplitLayout& L, const Polynomial& f, Eigen::VectorXcd& x, int iters) {
    int n = L.size();
    int d = static_cast<int>(f.degree());
    double fn = f.norm();
    auto [P, Q] = L.unpack(x);
    Eigen::VectorXcd r = residual_vec(derivative(P) * Q - P * derivative(Q), f, d + 1);
    for (int it = 0; it < iters; ++it) {
        double rn = r.norm();
        if (rn <= 1e-14 * fn) return true;
        Eigen::MatrixXcd J(d + 1, n);
        int col = 0;
        for (int i = 0; i < L.m; ++i) {
            if (i == L.k) continue;
            Polynomial dw = wronskian(Polynomial::monomial(i), Q);
            for (int row = 0; row <= d; ++row) J(row, col) = dw[row];
            ++col;
        }
        for (int i = 0; i <= L.k; ++i) {
            Polynomial dw = wronskian(P, Polynomial::monomial(i));
            for (int row = 0; row <= d; ++row) J(row, col) = dw[row];
            ++col;
        }
        Eigen::VectorXcd step = J.colPivHouseholderQr().solve(-r);
        if (!step.allFinite()) return false;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            Eigen::VectorXcd xt = x + t * step;
            auto [Pt, Qt] = L.unpack(xt);
            Eigen::VectorXcd rt = residual_vec(derivative(Pt) * Qt - Pt * derivative(Qt), f, d + 1);
            if (rt.norm() < (1.0 - 1e-4 * t) * rn || rt.norm() <= 1e-14 * fn) {
                x = xt;
                P = Pt;
                Q = Qt;
                r = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) return r.norm() <= 1e-12 * fn;
    }
    return r.norm() <= 1e-12 * fn;
}

}  // namespace detail

/// All coprime pairs with W(P,Q) = f found by a multi-start Newton search over each
/// admissible degree split, up to SL(2). Every hit is checked against the ODE
/// (R = W(P',Q') must leave a two-dimensional polynomial kernel) and the Wronskian residual.
inline std::vector<SolutionFamily> solve_generic(const Polynomial& f, const GenericSearchOptions& opt = {}) {
    if (f.is_zero()) throw std::invalid_argument("zero polynomial");
    int d = static_cast<int>(f.degree());
    if (d > opt.cap) throw std::invalid_argument("degree cap exceeded");
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> g;

    // root scale for random starts
    double scale = 0;
    for (int i = 0; i < d; ++i) scale = std::max(scale, std::pow(std::abs(f[i] / f.leading()), 1.0 / (d - i)));
    scale = std::max(scale, 0.5);

    bool squarefree = d == 0 || gcd(f, derivative(f)).degree() == 0;
    std::vector<SolutionFamily> out;
    for (int m = d + 1; 2 * m > d + 1; --m) {
        int k = d + 1 - m;
        detail::SplitLayout L{m, k};
        long expected = detail::binomial(d, k) - detail::binomial(d, k - 1);
        cplx qk = f.leading() / double(m - k);
        int found = 0;
        for (int s = 0; s < opt.starts_per_split; ++s) {
            Eigen::VectorXcd x(L.size());
            int idx = 0;
            for (int i = 0; i < m; ++i)
                if (i != k) x(idx++) = cplx(g(rng), g(rng)) * std::pow(scale, m - i);
            for (int i = 0; i < k; ++i) x(idx++) = qk * cplx(g(rng), g(rng)) * std::pow(scale, k - i);
            x(idx++) = qk;
            if (!detail::newton_split(L, f, x, opt.max_newton)) continue;
            auto [P, Q] = L.unpack(x);
            WronskianPair w = WronskianPair::make(P, Q);
            if (!w.independent || !w.coprime) continue;
            double res = wronskian_residual(w, f);
            if (res > 1e-9 * f.norm()) continue;
            Polynomial R = wronskian(derivative(P), derivative(Q));
            if (ode_kernel(f, R, d + 1, 1e-8).size() < 2) continue;
            WronskianPair c = canonical_form(w);
            bool dup = false;
            for (auto& o : out)
                if (same_canonical(o.representative, c)) dup = true;
            if (dup) continue;
            SolutionFamily fam;
            fam.kind = FamilyKind::Generic;
            fam.parameters = {{"deg_P", double(m)}, {"deg_Q", double(k)}};
            fam.constraint = "Lambda in SL(2)";
            fam.representative = c;
            fam.residual = wronskian_residual(c, f);
            out.push_back(fam);
            ++found;
            if (squarefree && found >= expected) break;
        }
    }
    return out;
}

}  // namespace css
