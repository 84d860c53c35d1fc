#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

namespace css {

/// Uniform M x M node grid on [-L, L]^2, spacing h = 2L/(M-1).
struct Grid {
    double L = 12.0;
    int M = 256;

    Grid() = default;
    Grid(double extent, int size) : L(extent), M(size) {
        if (!(L > 0)) throw std::invalid_argument("grid extent must be positive");
        if (M < 16 || M % 2 != 0) throw std::invalid_argument("grid size must be even and at least 16");
    }
    double h() const { return 2.0 * L / (M - 1); }
    double x(int i) const { return -L + i * h(); }
    std::size_t nodes() const { return static_cast<std::size_t>(M) * static_cast<std::size_t>(M); }
    bool operator==(const Grid& o) const { return L == o.L && M == o.M; }
};

/// Samples on a Grid, row-major: value(i, j) sits at (x(i), x(j)), index j*M + i.
template <class T>
struct Field {
    Grid grid;
    std::vector<T> v;

    Field() = default;
    explicit Field(const Grid& g, T fill = T(0)) : grid(g), v(g.nodes(), fill) {}

    T& operator()(int i, int j) { return v[static_cast<std::size_t>(j) * grid.M + i]; }
    const T& operator()(int i, int j) const { return v[static_cast<std::size_t>(j) * grid.M + i]; }
    int M() const { return grid.M; }

    Field& operator+=(const Field& o) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += o.v[k];
        return *this;
    }
    Field& operator-=(const Field& o) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k];
        return *this;
    }
    template <class S>
    Field& operator*=(S s) {
        for (auto& a : v) a *= s;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    template <class S>
    friend Field operator*(Field a, S s) {
        return a *= s;
    }
};

using RealField = Field<double>;
using ComplexField = Field<std::complex<double>>;
using VectorField = std::array<RealField, 2>;

template <class T, class Fn>
Field<T> sample(const Grid& g, Fn&& fn) {
    Field<T> f(g);
    for (int j = 0; j < g.M; ++j)
        for (int i = 0; i < g.M; ++i) f(i, j) = static_cast<T>(fn(g.x(i), g.x(j)));
    return f;
}

inline RealField density(const ComplexField& u) {
    RealField r(u.grid);
    for (std::size_t k = 0; k < r.v.size(); ++k) r.v[k] = std::norm(u.v[k]);
    return r;
}

inline RealField modulus(const ComplexField& u) {
    RealField r(u.grid);
    for (std::size_t k = 0; k < r.v.size(); ++k) r.v[k] = std::abs(u.v[k]);
    return r;
}

template <class T>
Field<T> pointwise(const Field<T>& a, const Field<T>& b) {
    Field<T> r(a.grid);
    for (std::size_t k = 0; k < r.v.size(); ++k) r.v[k] = a.v[k] * b.v[k];
    return r;
}

/// C-infinity step: 1 for r <= r0, 0 for r >= r1
inline double smooth_cutoff(double r, double r0, double r1) {
    if (r <= r0) return 1.0;
    if (r >= r1) return 0.0;
    auto psi = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
    double t = (r - r0) / (r1 - r0);
    return psi(1 - t) / (psi(1 - t) + psi(t));
}

inline ComplexField complexify(const RealField& a) {
    ComplexField r(a.grid);
    for (std::size_t k = 0; k < r.v.size(); ++k) r.v[k] = a.v[k];
    return r;
}

// ---------------------------------------------------------------- finite differences

/// Stencil order used when none is given. Fourth order is not enough to resolve the
/// higher vortex rings at the default grid sizes.
inline constexpr int default_order = 8;

namespace fd {

// central weights for offsets 1..p (antisymmetric first derivative, symmetric second)
inline const std::vector<double>& first_weights(int order) {
    static const std::vector<double> w2{0.5};
    static const std::vector<double> w4{2.0 / 3.0, -1.0 / 12.0};
    static const std::vector<double> w6{3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
    static const std::vector<double> w8{4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    switch (order) {
        case 2: return w2;
        case 4: return w4;
        case 6: return w6;
        case 8: return w8;
    }
    throw std::invalid_argument("finite-difference order must be 2, 4, 6 or 8");
}

// {center, offsets 1..p}
inline const std::vector<double>& second_weights(int order) {
    static const std::vector<double> w2{-2.0, 1.0};
    static const std::vector<double> w4{-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
    static const std::vector<double> w6{-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};
    static const std::vector<double> w8{-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
    switch (order) {
        case 2: return w2;
        case 4: return w4;
        case 6: return w6;
        case 8: return w8;
    }
    throw std::invalid_argument("finite-difference order must be 2, 4, 6 or 8");
}

// 1-D derivative of a strided line; reduced-order central stencils near the ends,
// one-sided second order at the end nodes.
template <class T>
void diff_line(const T* in, std::ptrdiff_t stride, int M, double h, int order, int deriv, T* out,
               std::ptrdiff_t ostride) {
    auto at = [&](int k) -> const T& { return in[k * stride]; };
    for (int k = 0; k < M; ++k) {
        int reach = std::min(k, M - 1 - k);
        T acc{};
        if (reach == 0) {
            int s = (k == 0) ? 1 : -1;
            if (deriv == 1) {
                acc = double(s) * (-3.0 * at(k) + 4.0 * at(k + s) - at(k + 2 * s)) / (2.0 * h);
            } else {
                acc = (2.0 * at(k) - 5.0 * at(k + s) + 4.0 * at(k + 2 * s) - at(k + 3 * s)) / (h * h);
            }
        } else {
            int ord = std::min(order, 2 * reach);
            if (deriv == 1) {
                const auto& w = first_weights(ord);
                for (std::size_t p = 0; p < w.size(); ++p) {
                    int o = static_cast<int>(p) + 1;
                    acc += w[p] * (at(k + o) - at(k - o));
                }
                acc = acc / h;
            } else {
                const auto& w = second_weights(ord);
                acc = w[0] * at(k);
                for (std::size_t p = 1; p < w.size(); ++p) {
                    int o = static_cast<int>(p);
                    acc += w[p] * (at(k + o) + at(k - o));
                }
                acc = acc / (h * h);
            }
        }
        out[k * ostride] = acc;
    }
}

}  // namespace fd

/// d/dx_axis (axis 0 = x, index i; axis 1 = y, index j)
template <class T>
Field<T> partial(const Field<T>& f, int axis, int order = default_order) {
    Field<T> r(f.grid);
    int M = f.grid.M;
    double h = f.grid.h();
    for (int l = 0; l < M; ++l) {
        if (axis == 0)
            fd::diff_line(&f.v[static_cast<std::size_t>(l) * M], 1, M, h, order, 1, &r.v[static_cast<std::size_t>(l) * M], 1);
        else
            fd::diff_line(&f.v[l], M, M, h, order, 1, &r.v[l], M);
    }
    return r;
}

template <class T>
Field<T> second_partial(const Field<T>& f, int axis, int order = default_order) {
    Field<T> r(f.grid);
    int M = f.grid.M;
    double h = f.grid.h();
    for (int l = 0; l < M; ++l) {
        if (axis == 0)
            fd::diff_line(&f.v[static_cast<std::size_t>(l) * M], 1, M, h, order, 2, &r.v[static_cast<std::size_t>(l) * M], 1);
        else
            fd::diff_line(&f.v[l], M, M, h, order, 2, &r.v[l], M);
    }
    return r;
}

template <class T>
std::array<Field<T>, 2> gradient(const Field<T>& f, int order = default_order) {
    return {partial(f, 0, order), partial(f, 1, order)};
}

template <class T>
Field<T> laplacian(const Field<T>& f, int order = default_order) {
    return second_partial(f, 0, order) + second_partial(f, 1, order);
}

/// (-d2 f, d1 f)
inline VectorField perp_gradient(const RealField& f, int order = default_order) {
    RealField a = partial(f, 1, order);
    a *= -1.0;
    return {a, partial(f, 0, order)};
}

inline RealField divergence(const VectorField& F, int order = default_order) {
    return partial(F[0], 0, order) + partial(F[1], 1, order);
}

inline RealField curl(const VectorField& F, int order = default_order) {
    return partial(F[1], 0, order) - partial(F[0], 1, order);
}

// ---------------------------------------------------------------- quadrature

/// trapezoid weight of node (i, j) divided by h^2
inline double trapezoid_weight(int i, int j, int M) {
    double wi = (i == 0 || i == M - 1) ? 0.5 : 1.0;
    double wj = (j == 0 || j == M - 1) ? 0.5 : 1.0;
    return wi * wj;
}

/// composite trapezoid of |f|^p over the grid
template <class T>
double quadrature(const Field<T>& f, double p = 1.0) {
    int M = f.grid.M;
    double h = f.grid.h();
    double s = 0;
    for (int j = 0; j < M; ++j) {
        double row = 0;
        for (int i = 0; i < M; ++i) {
            double a = std::abs(f(i, j));
            double t = p == 1.0 ? a : (p == 2.0 ? a * a : (p == 4.0 ? a * a * a * a : std::pow(a, p)));
            row += trapezoid_weight(i, j, M) * t;
        }
        s += row;
    }
    return s * h * h;
}

/// signed trapezoid integral of a real field
inline double integrate(const RealField& f) {
    int M = f.grid.M;
    double s = 0;
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) s += trapezoid_weight(i, j, M) * f(i, j);
    return s * f.grid.h() * f.grid.h();
}

/// trapezoid integral restricted to nodes at least `margin` cells from the boundary
inline double integrate_interior(const RealField& f, int margin) {
    int M = f.grid.M;
    double s = 0;
    for (int j = margin; j < M - margin; ++j)
        for (int i = margin; i < M - margin; ++i) s += f(i, j);
    return s * f.grid.h() * f.grid.h();
}

/// real inner product Re <a, b> = Re int conj(a) b
inline double inner(const ComplexField& a, const ComplexField& b) {
    int M = a.grid.M;
    double s = 0;
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) s += trapezoid_weight(i, j, M) * std::real(std::conj(a(i, j)) * b(i, j));
    return s * a.grid.h() * a.grid.h();
}

/// bilinear interpolation; zero outside the grid
template <class T>
T interpolate(const Field<T>& f, double x, double y) {
    const Grid& g = f.grid;
    double h = g.h();
    double fx = (x + g.L) / h, fy = (y + g.L) / h;
    if (fx < 0 || fy < 0 || fx > g.M - 1 || fy > g.M - 1) return T(0);
    int i = std::min(static_cast<int>(fx), g.M - 2), j = std::min(static_cast<int>(fy), g.M - 2);
    double tx = fx - i, ty = fy - j;
    return (1 - tx) * (1 - ty) * f(i, j) + tx * (1 - ty) * f(i + 1, j) + (1 - tx) * ty * f(i, j + 1) + tx * ty * f(i + 1, j + 1);
}

/// bicubic (Catmull-Rom) interpolation; zero outside the grid
template <class T>
T interpolate_cubic(const Field<T>& f, double x, double y) {
    const Grid& g = f.grid;
    double h = g.h();
    double fx = (x + g.L) / h, fy = (y + g.L) / h;
    if (fx < 0 || fy < 0 || fx > g.M - 1 || fy > g.M - 1) return T(0);
    int i = std::min(static_cast<int>(fx), g.M - 2), j = std::min(static_cast<int>(fy), g.M - 2);
    double tx = fx - i, ty = fy - j;
    auto w = [](double t, double* c) {
        c[0] = ((-t + 2) * t - 1) * t / 2;
        c[1] = (((3 * t - 5) * t) * t + 2) / 2;
        c[2] = ((-3 * t + 4) * t + 1) * t / 2;
        c[3] = ((t - 1) * t * t) / 2;
    };
    double wx[4], wy[4];
    w(tx, wx);
    w(ty, wy);
    T acc{};
    for (int b = 0; b < 4; ++b) {
        int jj = std::clamp(j - 1 + b, 0, g.M - 1);
        T row{};
        for (int a = 0; a < 4; ++a) {
            int ii = std::clamp(i - 1 + a, 0, g.M - 1);
            row += wx[a] * f(ii, jj);
        }
        acc += wy[b] * row;
    }
    return acc;
}

/// node index nearest to the origin
inline std::pair<int, int> nearest_origin_node(const Grid& g) {
    int i = static_cast<int>(std::lround(g.L / g.h()));
    return {i, i};
}

// ---------------------------------------------------------------- I/O

inline std::string field_kind(const RealField&) { return "real"; }
inline std::string field_kind(const ComplexField&) { return "complex"; }

namespace detail {
inline void put_le(std::ostream& os, double x) {
    std::uint64_t b;
    std::memcpy(&b, &x, 8);
    unsigned char c[8];
    for (int k = 0; k < 8; ++k) c[k] = static_cast<unsigned char>((b >> (8 * k)) & 0xff);
    os.write(reinterpret_cast<const char*>(c), 8);
}
inline double get_le(std::istream& is) {
    unsigned char c[8];
    if (!is.read(reinterpret_cast<char*>(c), 8)) throw std::invalid_argument("truncated field file");
    std::uint64_t b = 0;
    for (int k = 0; k < 8; ++k) b |= std::uint64_t(c[k]) << (8 * k);
    double x;
    std::memcpy(&x, &b, 8);
    return x;
}
}  // namespace detail

/// Binary as little-endian (re, im) f64 pairs row-major, plus `<path>.json` sidecar {L, M, kind}.
/// Real fields store im = 0.
template <class T>
void write_field(const Field<T>& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    for (auto& a : f.v) {
        std::complex<double> z(a);
        detail::put_le(os, z.real());
        detail::put_le(os, z.imag());
    }
    nlohmann::json side{{"L", f.grid.L}, {"M", f.grid.M}, {"kind", field_kind(f)}};
    std::ofstream js(path + ".json");
    js << side.dump(2) << "\n";
}

inline ComplexField read_field(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw std::invalid_argument("missing sidecar " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(js);
    Grid g(side.at("L").get<double>(), side.at("M").get<int>());
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::invalid_argument("cannot open " + path);
    ComplexField f(g);
    for (auto& a : f.v) {
        double re = detail::get_le(is);
        double im = detail::get_le(is);
        a = {re, im};
    }
    for (auto& a : f.v)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw std::invalid_argument("non-finite field value");
    return f;
}

inline std::string format_g17(double x) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << x;
    return os.str();
}

/// CSV of the row through the node nearest y = 0: x, re, im
template <class T>
void write_slice_csv(const Field<T>& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    auto [i0, j0] = nearest_origin_node(f.grid);
    (void)i0;
    os << "x,re,im\n";
    for (int i = 0; i < f.grid.M; ++i) {
        std::complex<double> z(f(i, j0));
        os << format_g17(f.grid.x(i)) << "," << format_g17(z.real()) << "," << format_g17(z.imag()) << "\n";
    }
}

}  // namespace css
