#pragma once

#include "grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace css {

/// Per-h^2 weight of the singular cell for the log kernel: the lattice sum with the
/// origin removed needs h^2 (log h + c) at the origin to match the integral to O(h^4 log h).
/// c = Z'(0)/2 with Z the Epstein zeta function of the square lattice,
/// Z(s) = 4 zeta(s) beta(s), giving c = -(log(2 pi) + 2 beta'(0))/2.
inline double log_self_constant() {
    static const double c = [] {
        const double pi = 3.14159265358979323846;
        double g14 = std::tgamma(0.25);
        double beta_prime0 = std::log(g14 * g14 / (2.0 * pi * std::sqrt(2.0)));
        return -0.5 * (std::log(2.0 * pi) + 2.0 * beta_prime0);
    }();
    return c;
}

enum class KernelMethod { FFT, Direct };

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

/// Singular-kernel lattice sums on a grid:
///   log kernel  L[f](x_i) = h^2 sum_{j != i} log|x_i - y_j| f_j + h^2 (log h + c) f_i
///   perp kernel K[f](x_i) = h^2 sum_{j != i} (x_i - y_j)^perp / |x_i - y_j|^2 f_j
/// The sums are exact discrete (aperiodic) convolutions, evaluated either by a zero-padded
/// FFT of size 2M or by direct summation; both give the same numbers up to rounding.
class KernelSums {
public:
    explicit KernelSums(const Grid& g, KernelMethod method = KernelMethod::FFT) : grid_(g), method_(method) {
        if (method_ == KernelMethod::FFT) setup_fft();
    }
    KernelSums(const KernelSums&) = delete;
    KernelSums& operator=(const KernelSums&) = delete;
    ~KernelSums() {
        if (plan_fwd_) fftw_destroy_plan(plan_fwd_);
        if (plan_bwd_) fftw_destroy_plan(plan_bwd_);
    }

    const Grid& grid() const { return grid_; }
    KernelMethod method() const { return method_; }

    RealField log_sum(const RealField& f) const { return apply(f, 0); }
    VectorField perp_sum(const RealField& f) const { return {apply(f, 1), apply(f, 2)}; }
    RealField perp_component(const RealField& f, int comp) const { return apply(f, 1 + comp); }

    static double kernel(int which, double dx, double dy, double h) {
        double r2 = dx * dx + dy * dy;
        if (r2 == 0.0) return which == 0 ? std::log(h) + log_self_constant() : 0.0;
        if (which == 0) return 0.5 * std::log(r2);
        if (which == 1) return -dy / r2;
        return dx / r2;
    }

private:
    RealField apply(const RealField& f, int which) const {
        if (!(f.grid == grid_)) throw std::invalid_argument("field grid does not match kernel grid");
        return method_ == KernelMethod::FFT ? apply_fft(f, which) : apply_direct(f, which);
    }

    RealField apply_direct(const RealField& f, int which) const {
        int M = grid_.M;
        double h = grid_.h();
        // kernel table over offsets
        int W = 2 * M - 1;
        std::vector<double> k(static_cast<std::size_t>(W) * W);
        for (int b = 0; b < W; ++b)
            for (int a = 0; a < W; ++a) k[static_cast<std::size_t>(b) * W + a] = kernel(which, (a - (M - 1)) * h, (b - (M - 1)) * h, h);
        RealField out(grid_);
        for (int j = 0; j < M; ++j)
            for (int i = 0; i < M; ++i) {
                double s = 0;
                for (int jj = 0; jj < M; ++jj) {
                    const double* krow = &k[static_cast<std::size_t>(j - jj + M - 1) * W + (i + M - 1)];
                    const double* frow = &f.v[static_cast<std::size_t>(jj) * M];
                    for (int ii = 0; ii < M; ++ii) s += krow[-ii] * frow[ii];
                }
                out(i, j) = s * h * h;
            }
        return out;
    }

    void setup_fft() {
        int M = grid_.M;
        N_ = 2 * M;
        nc_ = static_cast<std::size_t>(N_) * (N_ / 2 + 1);
        std::size_t nr = static_cast<std::size_t>(N_) * N_;
        double* rbuf = fftw_alloc_real(nr);
        fftw_complex* cbuf = fftw_alloc_complex(nc_);
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            plan_fwd_ = fftw_plan_dft_r2c_2d(N_, N_, rbuf, cbuf, FFTW_ESTIMATE | FFTW_UNALIGNED);
            plan_bwd_ = fftw_plan_dft_c2r_2d(N_, N_, cbuf, rbuf, FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
        fftw_free(rbuf);
        fftw_free(cbuf);
        double h = grid_.h();
        std::vector<double> k(nr);
        for (int w = 0; w < 3; ++w) {
            for (int b = 0; b < N_; ++b) {
                int ob = b < M ? b : b - N_;
                for (int a = 0; a < N_; ++a) {
                    int oa = a < M ? a : a - N_;
                    double val = (std::abs(oa) >= M || std::abs(ob) >= M) ? 0.0 : kernel(w, oa * h, ob * h, h);
                    k[static_cast<std::size_t>(b) * N_ + a] = val;
                }
            }
            spectra_[w].resize(nc_);
            fftw_execute_dft_r2c(plan_fwd_, k.data(), reinterpret_cast<fftw_complex*>(spectra_[w].data()));
        }
    }

    RealField apply_fft(const RealField& f, int which) const {
        int M = grid_.M;
        std::size_t nr = static_cast<std::size_t>(N_) * N_;
        std::vector<double> buf(nr, 0.0);
        for (int j = 0; j < M; ++j)
            std::copy(&f.v[static_cast<std::size_t>(j) * M], &f.v[static_cast<std::size_t>(j) * M] + M,
                      &buf[static_cast<std::size_t>(j) * N_]);
        std::vector<std::complex<double>> spec(nc_);
        fftw_execute_dft_r2c(plan_fwd_, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
        const auto& ks = spectra_[which];
        for (std::size_t q = 0; q < nc_; ++q) spec[q] *= ks[q];
        fftw_execute_dft_c2r(plan_bwd_, reinterpret_cast<fftw_complex*>(spec.data()), buf.data());
        double h = grid_.h();
        double scale = h * h / (double(N_) * double(N_));
        RealField out(grid_);
        for (int j = 0; j < M; ++j)
            for (int i = 0; i < M; ++i) out(i, j) = buf[static_cast<std::size_t>(j) * N_ + i] * scale;
        return out;
    }

    Grid grid_;
    KernelMethod method_;
    int N_ = 0;
    std::size_t nc_ = 0;
    fftw_plan plan_fwd_ = nullptr;
    fftw_plan plan_bwd_ = nullptr;
    std::vector<std::complex<double>> spectra_[3];
};

inline void check_density(const RealField& rho) {
    for (double x : rho.v) {
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite density");
        if (x < -1e-12) throw std::invalid_argument("negative density");
    }
}

/// Phi[rho](x) = int (log|x-y| - log(|y|+1)) rho(y) dy
inline RealField superpotential(const KernelSums& ks, const RealField& rho) {
    check_density(rho);
    RealField phi = ks.log_sum(rho);
    const Grid& g = rho.grid;
    RealField w = sample<double>(g, [](double x, double y) { return std::log(std::hypot(x, y) + 1.0); });
    double c = integrate(pointwise(w, rho));
    for (auto& a : phi.v) a -= c;
    return phi;
}

/// The perp-kernel lattice sum misses the first-order part of the singular cell,
/// -(h^2/2) grad^perp f, which is added back here.
inline RealField perp_convolution(const KernelSums& ks, const RealField& f, int comp, int order = default_order) {
    RealField out = ks.perp_component(f, comp);
    double h = f.grid.h();
    // (grad^perp f)_0 = -d2 f, (grad^perp f)_1 = d1 f
    RealField d = comp == 0 ? partial(f, 1, order) * -1.0 : partial(f, 0, order);
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] -= 0.5 * h * h * d.v[k];
    return out;
}

/// A[rho](x) = int (x-y)^perp / |x-y|^2 rho(y) dy, principal value
inline VectorField vector_potential(const KernelSums& ks, const RealField& rho, int order = default_order) {
    check_density(rho);
    return {perp_convolution(ks, rho, 0, order), perp_convolution(ks, rho, 1, order)};
}

/// A*[F](x) = int (x-y)^perp / |x-y|^2 . F(y) dy
inline RealField a_star(const KernelSums& ks, const VectorField& F, int order = default_order) {
    return perp_convolution(ks, F[0], 0, order) + perp_convolution(ks, F[1], 1, order);
}

// convenience overloads that build the kernel tables on the fly
inline RealField superpotential(const RealField& rho) {
    KernelSums ks(rho.grid);
    return superpotential(ks, rho);
}
inline VectorField vector_potential(const RealField& rho) {
    KernelSums ks(rho.grid);
    return vector_potential(ks, rho);
}
inline RealField a_star(const VectorField& F) {
    KernelSums ks(F[0].grid);
    return a_star(ks, F);
}

/// Angular averages of Phi[rho] on circles of the given radii divided by log r.
inline std::vector<std::pair<double, double>> newton_check(const RealField& rho, const std::vector<double>& radii,
                                                           int samples = 720) {
    for (double r : radii) {
        if (r > 0.8 * rho.grid.L) throw std::invalid_argument("tail-dominated");
        if (r <= 1.0) throw std::invalid_argument("radius must exceed 1");
    }
    RealField phi = superpotential(rho);
    std::vector<std::pair<double, double>> out;
    for (double r : radii) {
        double s = 0;
        for (int k = 0; k < samples; ++k) {
            double t = 2.0 * 3.14159265358979323846 * k / samples;
            s += interpolate_cubic(phi, r * std::cos(t), r * std::sin(t));
        }
        out.push_back({r, s / samples / std::log(r)});
    }
    return out;
}

}  // namespace css
