#pragma once

#include "kernels.hpp"
#include "soliton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace css {

/// term-by-term decomposition of E_beta[u] = int |(grad + i beta A[|u|^2]) u|^2
struct EnergyReport {
    double beta = 0;
    double kinetic = 0;          // int |grad u|^2
    double cross = 0;            // 2 beta int A.J
    double curvature = 0;        // beta^2 int |A|^2 |u|^2
    double quartic = 0;          // int |u|^4
    double mass = 0;             // int |u|^2
    double total_E_beta = 0;     // int |(grad + i beta A) u|^2
    double susy_rhs = 0;         // factorized form of E - 2 pi beta int |u|^4; NaN if the weight overflows
    double bogomolnyi_gap = 0;   // E - 2 pi beta int |u|^4
    double scaled_quotient = 0;  // mass * E_{beta/mass}[u] / int |u|^4

    nlohmann::json to_json() const {
        return {{"beta", beta},           {"kinetic", kinetic},       {"cross", cross},
                {"curvature", curvature}, {"quartic", quartic},       {"mass", mass},
                {"total_E_beta", total_E_beta}, {"susy_rhs", susy_rhs}, {"bogomolnyi_gap", bogomolnyi_gap},
                {"scaled_quotient", scaled_quotient}};
    }
};

/// J = Im(conj(u) grad u)
inline VectorField current(const ComplexField& u, int order = default_order) {
    auto g = gradient(u, order);
    VectorField J{RealField(u.grid), RealField(u.grid)};
    for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < u.v.size(); ++k) J[c].v[k] = std::imag(std::conj(u.v[k]) * g[c].v[k]);
    return J;
}

namespace detail {

inline double covariant_energy(const ComplexField& u, const std::array<ComplexField, 2>& du, const VectorField& A, double beta) {
    RealField e(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) {
        cplx d1 = du[0].v[k] + cplx(0, beta * A[0].v[k]) * u.v[k];
        cplx d2 = du[1].v[k] + cplx(0, beta * A[1].v[k]) * u.v[k];
        e.v[k] = std::norm(d1) + std::norm(d2);
    }
    return integrate(e);
}

}  // namespace detail

/// int |(d1 + s i d2)(e^{-s beta Phi} u)|^2 e^{2 s beta Phi}, s = +-1; equals E_beta + s 2 pi beta int |u|^4
inline double susy_rhs(const KernelSums& ks, const ComplexField& u, double beta, int sign, int order = default_order) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    RealField phi = superpotential(ks, density(u));
    // the integral does not depend on the additive gauge of Phi; centring it halves the exponent range
    auto [lo, hi] = std::minmax_element(phi.v.begin(), phi.v.end());
    double mid = 0.5 * (*lo + *hi);
    for (auto& x : phi.v) x -= mid;
    double s = sign;
    ComplexField w(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) {
        double ex = -s * beta * phi.v[k];
        if (std::abs(2 * ex) > 700) throw std::overflow_error("superpotential exponent exceeds 700");
        w.v[k] = std::exp(ex) * u.v[k];
    }
    auto dw = gradient(w, order);
    RealField e(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) {
        cplx d = dw[0].v[k] + cplx(0, s) * dw[1].v[k];
        e.v[k] = std::norm(d) * std::exp(2 * s * beta * phi.v[k]);
    }
    return integrate(e);
}

inline EnergyReport magnetic_energy(const KernelSums& ks, const ComplexField& u, double beta, int order = default_order) {
    RealField rho = density(u);
    EnergyReport r;
    r.beta = beta;
    r.mass = integrate(rho);
    if (!(r.mass > 0)) throw std::invalid_argument("zero field");
    VectorField A = vector_potential(ks, rho, order);
    auto du = gradient(u, order);
    VectorField J{RealField(u.grid), RealField(u.grid)};
    RealField kin(u.grid), cr(u.grid), cu(u.grid), q(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) {
        kin.v[k] = std::norm(du[0].v[k]) + std::norm(du[1].v[k]);
        double j1 = std::imag(std::conj(u.v[k]) * du[0].v[k]);
        double j2 = std::imag(std::conj(u.v[k]) * du[1].v[k]);
        cr.v[k] = A[0].v[k] * j1 + A[1].v[k] * j2;
        cu.v[k] = (A[0].v[k] * A[0].v[k] + A[1].v[k] * A[1].v[k]) * rho.v[k];
        q.v[k] = rho.v[k] * rho.v[k];
    }
    r.kinetic = integrate(kin);
    r.cross = 2 * beta * integrate(cr);
    r.curvature = beta * beta * integrate(cu);
    r.quartic = integrate(q);
    r.total_E_beta = detail::covariant_energy(u, du, A, beta);
    r.bogomolnyi_gap = r.total_E_beta - 2 * pi * beta * r.quartic;
    try {
        r.susy_rhs = susy_rhs(ks, u, beta, -1, order);
    } catch (const std::overflow_error&) {
        r.susy_rhs = std::numeric_limits<double>::quiet_NaN();  // weight out of double range
    }
    // E_{beta/m} with A scaled by 1/m, times m
    double m = r.mass;
    r.scaled_quotient = m * (r.kinetic + r.cross / m + r.curvature / (m * m)) / r.quartic;
    return r;
}

inline EnergyReport magnetic_energy(const ComplexField& u, double beta, int order = default_order) {
    KernelSums ks(u.grid);
    return magnetic_energy(ks, u, beta, order);
}

struct ELResult {
    double residual = 0;  // interior L2 norm of (H - lambda) u
    double lambda = 0;
    ComplexField operator_u;  // H u
};

/// Stationarity operator
///   H u = -(grad + i beta A)^2 u - 2 beta^2 A*[A |u|^2] u - 2 beta A*[J] u - 2 gamma |u|^2 u
/// with lambda = int (-|grad u|^2 + beta^2 |A|^2 |u|^2).
inline ComplexField stationarity_operator(const KernelSums& ks, const ComplexField& u, double beta, double gamma,
                                          int order = default_order, VectorField* A_out = nullptr) {
    RealField rho = density(u);
    VectorField A = vector_potential(ks, rho, order);
    auto du = gradient(u, order);
    ComplexField lap = laplacian(u, order);
    RealField divA = divergence(A, order);
    VectorField J = current(u, order);
    VectorField Arho{pointwise(A[0], rho), pointwise(A[1], rho)};
    RealField s1 = a_star(ks, Arho, order);
    RealField s2 = a_star(ks, J, order);
    ComplexField H(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) {
        double a1 = A[0].v[k], a2 = A[1].v[k];
        cplx cov = -lap.v[k] - cplx(0, 2 * beta) * (a1 * du[0].v[k] + a2 * du[1].v[k]) - cplx(0, beta * divA.v[k]) * u.v[k] +
                   beta * beta * (a1 * a1 + a2 * a2) * u.v[k];
        H.v[k] = cov - (2 * beta * beta * s1.v[k] + 2 * beta * s2.v[k] + 2 * gamma * rho.v[k]) * u.v[k];
    }
    if (A_out) *A_out = A;
    return H;
}

inline ELResult el_residual(const KernelSums& ks, const ComplexField& u, double beta, double gamma, int order = default_order,
                            int margin = 3) {
    double mass = quadrature(u, 2.0);
    if (std::abs(mass - 1.0) > 1e-6) throw std::invalid_argument("el_residual needs a mass-normalized field");
    VectorField A;
    ComplexField H = stationarity_operator(ks, u, beta, gamma, order, &A);
    auto du = gradient(u, order);
    RealField lam(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) {
        double a2 = A[0].v[k] * A[0].v[k] + A[1].v[k] * A[1].v[k];
        lam.v[k] = -(std::norm(du[0].v[k]) + std::norm(du[1].v[k])) + beta * beta * a2 * std::norm(u.v[k]);
    }
    ELResult r;
    r.lambda = integrate(lam);
    RealField res(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) res.v[k] = std::norm(H.v[k] - r.lambda * u.v[k]);
    r.residual = std::sqrt(integrate_interior(res, margin));
    r.operator_u = std::move(H);
    return r;
}

/// int |A[rho]|^2 rho
inline double menger_melnikov(const KernelSums& ks, const RealField& rho) {
    VectorField A = vector_potential(ks, rho);
    RealField e(rho.grid);
    for (std::size_t k = 0; k < rho.v.size(); ++k)
        e.v[k] = (A[0].v[k] * A[0].v[k] + A[1].v[k] * A[1].v[k]) * rho.v[k];
    return integrate(e);
}

/// 1/R^2 for the circumradius R of a triangle: 16 area^2 / (a^2 b^2 c^2)
inline double inverse_circumradius_sq(double x1, double y1, double x2, double y2, double x3, double y3) {
    double cr = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1);  // twice the signed area
    double a2 = (x2 - x1) * (x2 - x1) + (y2 - y1) * (y2 - y1);
    double b2 = (x3 - x2) * (x3 - x2) + (y3 - y2) * (y3 - y2);
    double c2 = (x1 - x3) * (x1 - x3) + (y1 - y3) * (y1 - y3);
    double den = a2 * b2 * c2;
    if (den == 0) return 0;
    return 4.0 * cr * cr / den;
}

struct MonteCarloEstimate {
    double value = 0;
    double stderr_ = 0;
};

/// (mass^3 / 6) E[1/R^2] over iid triples drawn by `draw(rng) -> std::pair<double,double>`
template <class Draw, class Rng>
MonteCarloEstimate menger_melnikov_monte_carlo(Draw&& draw, double mass, std::size_t triples, Rng& rng) {
    double s = 0, s2 = 0;
    for (std::size_t t = 0; t < triples; ++t) {
        auto [x1, y1] = draw(rng);
        auto [x2, y2] = draw(rng);
        auto [x3, y3] = draw(rng);
        double v = inverse_circumradius_sq(x1, y1, x2, y2, x3, y3);
        s += v;
        s2 += v * v;
    }
    double n = double(triples);
    double mean = s / n;
    double var = std::max(0.0, s2 / n - mean * mean);
    double k = mass * mass * mass / 6.0;
    return {k * mean, k * std::sqrt(var / n)};
}

/// Sampler drawing points from a grid density (cell chosen by weight, uniform inside the cell).
class GridDensitySampler {
public:
    explicit GridDensitySampler(const RealField& rho) : grid_(rho.grid), cdf_(rho.v.size()) {
        double acc = 0;
        for (std::size_t k = 0; k < rho.v.size(); ++k) {
            acc += std::max(0.0, rho.v[k]);
            cdf_[k] = acc;
        }
        if (!(acc > 0)) throw std::invalid_argument("empty density");
    }
    template <class Rng>
    std::pair<double, double> operator()(Rng& rng) const {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double t = U(rng) * cdf_.back();
        std::size_t k = static_cast<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), t) - cdf_.begin());
        k = std::min(k, cdf_.size() - 1);
        int i = static_cast<int>(k % grid_.M), j = static_cast<int>(k / grid_.M);
        double h = grid_.h();
        return {grid_.x(i) + (U(rng) - 0.5) * h, grid_.x(j) + (U(rng) - 0.5) * h};
    }

private:
    Grid grid_;
    std::vector<double> cdf_;
};

/// Smallest length scale of log(|P|^2 + |Q|^2): min sqrt(d / (|P'|^2 + |Q'|^2)) over the
/// grid nodes, d = |P|^2 + |Q|^2. Finite-difference residuals of the Liouville equation
/// are only meaningful when this is several grid spacings.
inline double resolution_scale(const WronskianPair& pair, const Grid& g) {
    Polynomial dP = derivative(pair.P), dQ = derivative(pair.Q);
    double s = std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.M; ++j)
        for (int i = 0; i < g.M; ++i) {
            cplx z(g.x(i), g.x(j));
            double d = std::norm(pair.P(z)) + std::norm(pair.Q(z));
            double e = std::norm(dP(z)) + std::norm(dQ(z));
            if (e > 0) s = std::min(s, std::sqrt(d / e));
        }
    return s;
}

/// max over interior nodes of |-lap psi - |f|^2 e^psi| / (1 + |f|^2 e^psi)
inline double liouville_residual(const WronskianPair& pair, const Grid& g, int order = default_order, int margin = -1) {
    LiouvilleSolution s = LiouvilleSolution::from_pair(pair);
    RealField psi = sample<double>(g, [&](double x, double y) { return psi_value(s, cplx(x, y)); });
    RealField lap = laplacian(psi, order);
    if (margin < 0) margin = std::max(3, order / 2);
    double worst = 0;
    for (int j = margin; j < g.M - margin; ++j)
        for (int i = margin; i < g.M - margin; ++i) {
            double rhs = liouville_density(s, cplx(g.x(i), g.x(j)));
            worst = std::max(worst, std::abs(-lap(i, j) - rhs) / (1.0 + rhs));
        }
    return worst;
}

struct InequalityCheck {
    std::string name;
    double lhs = 0;  // the side that must not exceed rhs
    double rhs = 0;
    double margin() const {
        double s = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        return (rhs - lhs) / s;
    }
    bool violated(double tol = 1e-6) const { return margin() < -tol; }
};

struct InequalityReport {
    std::vector<InequalityCheck> checks;
    double hardy_ratio = 0;  // int |A u|^2 / (mass^2 int |grad |u||^2), logged as data
    bool any_violation(double tol = 1e-6) const {
        for (auto& c : checks)
            if (c.violated(tol)) return true;
        return false;
    }
    const InequalityCheck& get(const std::string& n) const {
        for (auto& c : checks)
            if (c.name == n) return c;
        throw std::out_of_range("no inequality named " + n);
    }
};

inline constexpr double hardy_constant = 1.5;

inline InequalityReport inequality_battery(const KernelSums& ks, const ComplexField& u, double beta, double c_lgn,
                                           int order = default_order) {
    EnergyReport e = magnetic_energy(ks, u, beta, order);
    RealField absu = modulus(u);
    auto g = gradient(absu, order);
    RealField ga(u.grid);
    for (std::size_t k = 0; k < ga.v.size(); ++k) ga.v[k] = g[0].v[k] * g[0].v[k] + g[1].v[k] * g[1].v[k];
    double grad_abs = integrate(ga);
    // beta-independent pieces
    double AA = beta != 0 ? e.curvature / (beta * beta) : magnetic_energy(ks, u, 1.0, order).curvature;
    double AJ = beta != 0 ? e.cross / (2 * beta) : magnetic_energy(ks, u, 1.0, order).cross / 2;

    InequalityReport r;
    r.checks.push_back({"diamagnetic", grad_abs, e.total_E_beta});
    r.checks.push_back({"hardy", AA, hardy_constant * e.mass * e.mass * grad_abs});
    r.checks.push_back({"gagliardo_nirenberg", c_lgn * e.quartic, e.mass * e.kinetic});
    r.checks.push_back({"bogomolnyi", 2 * pi * std::abs(beta) * e.quartic, e.total_E_beta});
    r.checks.push_back({"mm_interpolation", pi * e.quartic + std::abs(AJ), std::sqrt(e.kinetic * AA)});
    r.hardy_ratio = AA / (e.mass * e.mass * grad_abs);
    return r;
}

/// u_lambda(x) = lambda u(lambda x), resampled on the same grid (bicubic, zero outside)
inline ComplexField dilate(const ComplexField& u, double lambda) {
    const Grid& g = u.grid;
    ComplexField out(g);
    for (int j = 0; j < g.M; ++j)
        for (int i = 0; i < g.M; ++i) out(i, j) = lambda * interpolate_cubic(u, lambda * g.x(i), lambda * g.x(j));
    return out;
}

}  // namespace css
