#pragma once

#include "css/functionals.hpp"
#include "css/soliton.hpp"

#include <random>

namespace css::testing {

/// monic polynomial with d roots uniform in the disk of radius R
template <class Rng>
Polynomial random_rooted(Rng& rng, int d, double R) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Polynomial p = Polynomial::constant(1.0);
    for (int k = 0; k < d; ++k) p = p * Polynomial({-std::polar(R * std::sqrt(U(rng)), 2 * pi * U(rng)), 1.0});
    return p;
}

/// Random coprime pair with max degree in [1, max_deg], dilated so that
/// resolution_scale on `g` is at least `min_scale`. Draws needing a dilation
/// beyond `max_dilation` are rejected, keeping the features inside the box.
template <class Rng>
WronskianPair random_resolved_pair(Rng& rng, int max_deg, const Grid& g, double min_scale = 0.75,
                                   double max_dilation = 3.0) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (;;) {
        int n = 1 + static_cast<int>(U(rng) * max_deg);
        int m = static_cast<int>(U(rng) * (n + 1));
        Polynomial P = random_rooted(rng, n, 1.5);
        Polynomial Q = random_rooted(rng, m, 1.5) * std::polar(0.5 + 1.5 * U(rng), 2 * pi * U(rng));
        if (U(rng) < 0.5) std::swap(P, Q);
        if (!coprime(P, Q)) continue;
        WronskianPair w = WronskianPair::make(P, Q);
        if (!w.independent) continue;
        double s = resolution_scale(w, g);
        double k = std::max(1.0, min_scale / s);
        if (k > max_dilation) continue;
        // (P(z/k), Q(z/k)) multiplies every length scale by k
        WronskianPair d = WronskianPair::validated(rescaled(P, cplx(1.0 / k)), rescaled(Q, cplx(1.0 / k)));
        if (resolution_scale(d, g) < min_scale * (1 - 1e-9)) continue;
        return d;
    }
}

/// Smooth compactly supported complex field: Gaussian bumps with random complex
/// amplitudes times a random vortex factor, cut off smoothly inside the box.
template <class Rng>
ComplexField random_smooth_field(Rng& rng, const Grid& g) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    int bumps = 1 + static_cast<int>(U(rng) * 4);
    struct Bump {
        double x, y, w;
        cplx a;
    };
    std::vector<Bump> b;
    for (int k = 0; k < bumps; ++k)
        b.push_back({1.5 * N(rng), 1.5 * N(rng), 0.7 + 0.8 * U(rng), cplx(N(rng), N(rng))});
    cplx z0(N(rng), N(rng));
    bool vortex = U(rng) < 0.5;
    double r0 = 0.55 * g.L, r1 = 0.85 * g.L;
    ComplexField u(g);
    for (int j = 0; j < g.M; ++j)
        for (int i = 0; i < g.M; ++i) {
            double x = g.x(i), y = g.x(j);
            cplx s = 0;
            for (const auto& q : b) s += q.a * std::exp(-((x - q.x) * (x - q.x) + (y - q.y) * (y - q.y)) / (2 * q.w * q.w));
            if (vortex) s *= (cplx(x, y) - z0) / 2.0;
            u(i, j) = s * smooth_cutoff(std::hypot(x, y), r0, r1);
        }
    return u;
}

/// unit-mass isotropic Gaussian density exp(-|x|^2/w^2)/(pi w^2), shifted to (x0, y0)
inline RealField gaussian_density(const Grid& g, double w = 1.0, double x0 = 0, double y0 = 0, double mass = 1.0) {
    return sample<double>(g, [&](double x, double y) {
        return mass * std::exp(-((x - x0) * (x - x0) + (y - y0) * (y - y0)) / (w * w)) / (pi * w * w);
    });
}

inline ComplexField sqrt_field(const RealField& rho) {
    ComplexField u(rho.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) u.v[k] = std::sqrt(std::max(0.0, rho.v[k]));
    return u;
}

inline void normalize(ComplexField& u) {
    double m = quadrature(u, 2.0);
    for (auto& x : u.v) x /= std::sqrt(m);
}

}  // namespace css::testing
