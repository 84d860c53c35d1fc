#pragma once

#include "grid.hpp"
#include "inverse_wronskian.hpp"
#include "kernels.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numbers>

namespace css {

using std::numbers::pi;

struct LiouvilleSolution {
    WronskianPair pair;
    Polynomial f;

    static LiouvilleSolution from_pair(const WronskianPair& w) {
        if (!w.coprime || !w.independent) throw std::invalid_argument("Liouville solution needs a coprime independent pair");
        return {w, w.W};
    }
};

/// log 8 - 2 log(|P|^2 + |Q|^2)
inline double psi_value(const LiouvilleSolution& s, cplx z) {
    return std::log(8.0) - 2.0 * std::log(std::norm(s.pair.P(z)) + std::norm(s.pair.Q(z)));
}

/// |f|^2 e^psi = 8 |W|^2 / (|P|^2 + |Q|^2)^2
inline double liouville_density(const LiouvilleSolution& s, cplx z) {
    double d = std::norm(s.pair.P(z)) + std::norm(s.pair.Q(z));
    return 8.0 * std::norm(s.f(z)) / (d * d);
}

struct Soliton {
    WronskianPair pair;
    double beta = 2;
    double norm_const = 0;

    static Soliton from_pair(const WronskianPair& w) {
        if (!w.coprime || !w.independent) throw std::invalid_argument("soliton needs a coprime independent pair");
        long n = w.max_degree();
        if (n < 1) throw std::invalid_argument("soliton needs max degree at least 1");
        Soliton s;
        s.pair = w;
        s.beta = 2.0 * double(n);
        s.norm_const = std::sqrt(2.0 / (pi * s.beta));
        return s;
    }
    int n() const { return static_cast<int>(beta / 2); }
};

/// sqrt(2/(pi beta)) conj(W) / (|P|^2 + |Q|^2)
inline cplx u_value(const Soliton& s, cplx z) {
    double d = std::norm(s.pair.P(z)) + std::norm(s.pair.Q(z));
    return s.norm_const * std::conj(s.pair.W(z)) / d;
}

struct VortexSpec {
    int n = 1;
    cplx a = 1.0;
    double b = 1.0;
    cplx c = 0.0;
    cplx z0 = 0.0;
};

/// P = a (z - z0)^n + c, Q = b
inline Soliton vortex_ring(const VortexSpec& v) {
    if (v.n < 1) throw std::invalid_argument("vortex ring needs n >= 1");
    if (std::abs(v.a) == 0) throw std::invalid_argument("vortex ring needs a != 0");
    if (!(v.b > 0)) throw std::invalid_argument("vortex ring needs b > 0");
    Polynomial P = v.a * Polynomial::shifted_power(v.z0, static_cast<std::size_t>(v.n)) + Polynomial::constant(v.c);
    return Soliton::from_pair(WronskianPair::validated(P, Polynomial::constant(v.b)));
}

/// radial ring conj(C) sqrt(n/pi) conj(z)^{n-1} / (|z|^{2n} + |C|^2): P = z^n, Q = C
inline Soliton radial_ring(int n, cplx C = 1.0) {
    return Soliton::from_pair(WronskianPair::validated(Polynomial::monomial(static_cast<std::size_t>(n)), Polynomial::constant(C)));
}

template <class Fn>
ComplexField sample_complex(const Grid& g, Fn&& fn) {
    ComplexField f(g);
    for (int j = 0; j < g.M; ++j)
        for (int i = 0; i < g.M; ++i) f(i, j) = fn(cplx(g.x(i), g.x(j)));
    return f;
}

inline ComplexField sample_soliton(const Soliton& s, const Grid& g) {
    return sample_complex(g, [&](cplx z) { return u_value(s, z); });
}

/// (1/beta) log(|P|^2 + |Q|^2) + psi0
inline double superpotential_closed(const Soliton& s, cplx z, double psi0 = 0.0) {
    return std::log(std::norm(s.pair.P(z)) + std::norm(s.pair.Q(z))) / s.beta + psi0;
}

/// Additive constant of the closed-form superpotential, fixed by matching the grid
/// superpotential of |u|^2 at the node nearest the origin.
inline double superpotential_gauge(const Soliton& s, const Grid& g) {
    RealField phi = superpotential(density(sample_soliton(s, g)));
    auto [i, j] = nearest_origin_node(g);
    return phi(i, j) - superpotential_closed(s, cplx(g.x(i), g.x(j)));
}

struct VortexZeros {
    std::vector<RootMultiplicity> zeros;
    int total = 0;
    double range_lo = 0, range_hi = 0;  // [beta/2 - 1, beta - 2]
    bool in_range() const { return total >= range_lo - 1e-9 && total <= range_hi + 1e-9; }
};

inline VortexZeros zeros_and_vorticity(const Soliton& s) {
    VortexZeros z;
    z.zeros = roots(s.pair.W);
    for (auto& r : z.zeros) z.total += r.multiplicity;
    z.range_lo = s.beta / 2 - 1;
    z.range_hi = s.beta - 2;
    return z;
}

/// Representative of the R+ x SU(2) orbit: P monic of degree n, deg Q < n.
/// The stabilizer of this normal form is trivial, so it is a complete invariant.
inline std::pair<Polynomial, Polynomial> unitary_normal_form(const WronskianPair& w, PairTransform* applied = nullptr) {
    long n = w.max_degree();
    cplx a = w.P[static_cast<std::size_t>(n)], b = w.Q[static_cast<std::size_t>(n)];
    double s = std::norm(a) + std::norm(b);
    PairTransform T(std::conj(a) / s, std::conj(b) / s, -b / s, a / s);
    auto [P, Q] = act(T, w.pq());
    std::vector<cplx> p = P.coeffs(), q = Q.coeffs();
    p.resize(static_cast<std::size_t>(n) + 1);
    p[static_cast<std::size_t>(n)] = 1.0;
    if (q.size() > static_cast<std::size_t>(n)) q.resize(static_cast<std::size_t>(n));
    if (applied) *applied = T;
    return {Polynomial(p), Polynomial(q)};
}

struct OrbitResult {
    bool same = false;
    PairTransform witness;  // maps p1 to p2 when same
};

inline OrbitResult same_orbit(const WronskianPair& p1, const WronskianPair& p2, double tol = 1e-8) {
    OrbitResult r;
    if (p1.max_degree() != p2.max_degree()) return r;
    PairTransform T1, T2;
    auto c1 = unitary_normal_form(p1, &T1);
    auto c2 = unitary_normal_form(p2, &T2);
    if (!coefficients_close(c1.first, c2.first, tol) || !coefficients_close(c1.second, c2.second, tol)) return r;
    r.same = true;
    r.witness = T2.inverse() * T1;
    return r;
}

// ---------------------------------------------------------------- polar quadrature with tails

struct TailedIntegral {
    double disk = 0;   // quadrature over |z| <= R
    double tail = 0;   // analytic tail of the leading r^-4 term
    double bound = 0;  // bound on what the leading term misses beyond R
    double value() const { return disk + tail; }
};

/// int_{|z|<=R} g over the disk: Gauss-Legendre panels in r, trapezoid in angle.
template <class Fn>
double disk_integral(Fn&& g, double R, double panel = 0.25, int angles = 256) {
    boost::math::quadrature::gauss<double, 20> gl;
    int panels = std::max(1, static_cast<int>(std::ceil(R / panel)));
    double w = R / panels;
    double total = 0;
    for (int p = 0; p < panels; ++p) {
        double a = p * w, b = a + w;
        total += gl.integrate(
            [&](double r) {
                double s = 0;
                for (int k = 0; k < angles; ++k) {
                    double t = 2.0 * pi * (k + 0.5) / angles;
                    s += g(std::polar(r, t));
                }
                return s * (2.0 * pi / angles) * r;
            },
            a, b);
    }
    return total;
}

/// int |W|^2 / (|P|^2+|Q|^2)^2 over the plane (equals pi * max degree)
inline TailedIntegral wronskian_density_integral(const WronskianPair& w, double R = 40.0) {
    auto g = [&](cplx z) {
        double d = std::norm(w.P(z)) + std::norm(w.Q(z));
        return std::norm(w.W(z)) / (d * d);
    };
    TailedIntegral out;
    out.disk = disk_integral(g, R);
    long n = w.max_degree();
    double lead = std::norm(w.P[static_cast<std::size_t>(n)]) + std::norm(w.Q[static_cast<std::size_t>(n)]);
    double c = 0;
    if (w.W.degree() == 2 * n - 2) c = std::norm(w.W.leading()) / (lead * lead);
    out.tail = pi * c / (R * R);
    // next Laurent order is O(r^-5): bound its contribution by the sampled deviation at R
    double dev = 0;
    for (int k = 0; k < 64; ++k) {
        cplx z = std::polar(R, 2.0 * pi * k / 64);
        dev = std::max(dev, std::abs(g(z) * std::pow(R, 4) - c));
    }
    out.bound = 2.0 * pi * dev / (3.0 * R * R);
    return out;
}

/// int |f|^2 e^psi = 8 int |W|^2/(|P|^2+|Q|^2)^2
inline TailedIntegral flux_integral(const LiouvilleSolution& s, double R = 40.0) {
    TailedIntegral t = wronskian_density_integral(s.pair, R);
    t.disk *= 8;
    t.tail *= 8;
    t.bound *= 8;
    return t;
}

/// int |u_{P,Q}|^2
inline TailedIntegral mass_integral(const Soliton& s, double R = 40.0) {
    TailedIntegral t = wronskian_density_integral(s.pair, R);
    double k = s.norm_const * s.norm_const;
    t.disk *= k;
    t.tail *= k;
    t.bound *= k;
    return t;
}

/// int |u_n|^4 for the radial ring with parameter C: n/(6 pi |C|^{2/n}) Gamma(2+1/n) Gamma(2-1/n)
inline double ring_quartic_exact(int n, double absC = 1.0) {
    return n / (6.0 * pi * std::pow(absC, 2.0 / n)) * std::tgamma(2.0 + 1.0 / n) * std::tgamma(2.0 - 1.0 / n);
}

/// closed form of E_{beta, 2 pi beta}[u_n] / int |u_n|^4
inline double ring_ratio_exact(int n, double beta) {
    return pi * (2.0 * n - 1.0) / (n * (n + 1.0)) * (beta - 2.0 * n) * (beta - 2.0 * n);
}

inline nlohmann::json to_json(const WronskianPair& w) {
    return {{"P", to_json(w.P)}, {"Q", to_json(w.Q)}, {"W", to_json(w.W)}};
}

/// {"P":..., "Q":...} or {"vortex": {"n", "a", "b", "c", "z0"}}
inline Soliton soliton_from_json(const nlohmann::json& j) {
    if (j.contains("vortex")) {
        const auto& v = j.at("vortex");
        VortexSpec s;
        s.n = v.value("n", 1);
        if (v.contains("a")) s.a = complex_from_json(v.at("a"));
        s.b = v.value("b", 1.0);
        if (v.contains("c")) s.c = complex_from_json(v.at("c"));
        if (v.contains("z0")) s.z0 = complex_from_json(v.at("z0"));
        return vortex_ring(s);
    }
    if (!j.contains("P") || !j.contains("Q")) throw std::invalid_argument("soliton spec needs P and Q, or vortex");
    return Soliton::from_pair(WronskianPair::validated(polynomial_from_json(j.at("P")), polynomial_from_json(j.at("Q"))));
}

}  // namespace css
