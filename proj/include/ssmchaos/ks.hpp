#pragma once

#include "ssmchaos/rk4.hpp"
#include "ssmchaos/trajectory.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ssm {

namespace detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// RAII wrapper around an FFTW real<->complex transform pair of fixed size.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n), real_(n), spec_(n / 2 + 1) {
    // FFTW_ESTIMATE keeps plan selection deterministic; FFTW_MEASURE picks
    // kernels by runtime timing, which changes rounding between runs and
    // makes long chaotic integrations irreproducible.
    fwd_ = fftw_plan_dft_r2c_1d(n, real_.data(),
                                reinterpret_cast<fftw_complex*>(spec_.data()), FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec_.data()),
                                real_.data(), FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw std::runtime_error("FFTW plan creation failed");
  }
  ~RealFft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  /// Forward transform, unnormalized.
  void forward(const double* in, std::complex<double>* out) {
    std::copy(in, in + n_, real_.begin());
    fftw_execute(fwd_);
    std::copy(spec_.begin(), spec_.end(), out);
  }

  /// Inverse transform, normalized by 1/n.
  void inverse(const std::complex<double>* in, double* out) {
    std::copy(in, in + n_ / 2 + 1, spec_.begin());
    fftw_execute(bwd_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = real_[i] * scale;
  }

  int size() const { return n_; }

 private:
  int n_;
  std::vector<double> real_;
  std::vector<std::complex<double>> spec_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace detail

/// Fourier-spectral ETDRK4 solver for u_t = -u u_x - u_xx - u_xxxx on the
/// periodic domain [-L/2, L/2). Modes with index above n_modes are truncated.
/// The ETDRK4 phi-coefficients are evaluated by complex-contour averaging,
/// which stays accurate for the near-zero eigenvalues of the linear operator.
class KsSolver {
 public:
  KsSolver(double L, int n_modes, int n_grid, double dt)
      : L_(L), n_modes_(n_modes), n_grid_(n_grid), dt_(dt), fft_(n_grid) {
    if (L <= 0.0) throw std::invalid_argument("KsSolver: L must be positive");
    if (!detail::is_power_of_two(n_grid))
      throw std::invalid_argument("KsSolver: n_grid must be a power of two");
    if (n_modes > n_grid / 2)
      throw std::invalid_argument("KsSolver: n_modes exceeds n_grid/2");
    if (dt <= 0.0) throw std::invalid_argument("KsSolver: dt must be positive");

    const int nk = n_grid / 2 + 1;
    k_.resize(nk);
    for (int j = 0; j < nk; ++j) k_[j] = 2.0 * M_PI * j / L;

    // ETDRK4 coefficients (contour integral with M points on a unit circle
    // around each L*dt eigenvalue)
    E_.resize(nk);
    E2_.resize(nk);
    Q_.resize(nk);
    f1_.resize(nk);
    f2_.resize(nk);
    f3_.resize(nk);
    const int M = 32;
    for (int j = 0; j < nk; ++j) {
      const double lam = k_[j] * k_[j] - std::pow(k_[j], 4);  // dispersion relation
      const double z = lam * dt;
      E_[j] = std::exp(z);
      E2_[j] = std::exp(0.5 * z);
      std::complex<double> Q = 0, f1 = 0, f2 = 0, f3 = 0;
      for (int m = 0; m < M; ++m) {
        const std::complex<double> r =
            z + std::polar(1.0, M_PI * (m + 0.5) / M);
        const auto r2 = r * r, r3 = r2 * r;
        const auto er = std::exp(r), er2 = std::exp(0.5 * r);
        Q += dt * (er2 - 1.0) / r;
        f1 += dt * (-4.0 - r + er * (4.0 - 3.0 * r + r2)) / r3;
        f2 += dt * (2.0 + r + er * (-2.0 + r)) / r3;
        f3 += dt * (-4.0 - 3.0 * r - r2 + er * (4.0 - r)) / r3;
      }
      Q_[j] = Q.real() / M;
      f1_[j] = f1.real() / M;
      f2_[j] = f2.real() / M;
      f3_[j] = f3.real() / M;
    }
  }

  /// Integrate from grid function u0, storing every `store_stride`-th sample
  /// (including t = 0). Throws BlowUpError on non-finite fields.
  TrajectorySet integrate(const Vector& u0, std::pair<double, double> t_span,
                          int store_stride = 1) {
    if (u0.size() != n_grid_) throw std::invalid_argument("KsSolver: u0 grid size mismatch");
    const auto n_steps = static_cast<int>(std::llround((t_span.second - t_span.first) / dt_));
    const int n_stored = n_steps / store_stride + 1;
    Matrix out(n_stored, n_grid_);

    const int nk = n_grid_ / 2 + 1;
    std::vector<std::complex<double>> v(nk), Nv(nk), a(nk), Na(nk), b(nk), Nb(nk), c(nk), Nc(nk);
    std::vector<double> u(n_grid_);
    for (int i = 0; i < n_grid_; ++i) u[i] = u0[i];
    fft_.forward(u.data(), v.data());
    dealias(v);

    out.row(0) = u0.transpose();
    int stored = 1;
    for (int step = 1; step <= n_steps; ++step) {
      nonlinear(v, Nv);
      for (int j = 0; j < nk; ++j) a[j] = E2_[j] * v[j] + Q_[j] * Nv[j];
      nonlinear(a, Na);
      for (int j = 0; j < nk; ++j) b[j] = E2_[j] * v[j] + Q_[j] * Na[j];
      nonlinear(b, Nb);
      for (int j = 0; j < nk; ++j) c[j] = E2_[j] * a[j] + Q_[j] * (2.0 * Nb[j] - Nv[j]);
      nonlinear(c, Nc);
      for (int j = 0; j < nk; ++j)
        v[j] = E_[j] * v[j] + f1_[j] * Nv[j] + 2.0 * f2_[j] * (Na[j] + Nb[j]) + f3_[j] * Nc[j];
      dealias(v);

      if (step % store_stride == 0) {
        fft_.inverse(v.data(), u.data());
        for (int i = 0; i < n_grid_; ++i) {
          if (!std::isfinite(u[i])) throw BlowUpError(t_span.first + step * dt_);
          out(stored, i) = u[i];
        }
        ++stored;
      }
    }
    TrajectorySet traj;
    traj.dt = dt_ * store_stride;
    traj.states.push_back(std::move(out));
    return traj;
  }

  double dt() const { return dt_; }
  int n_grid() const { return n_grid_; }

  /// Grid coordinates on [-L/2, L/2).
  Vector grid() const {
    Vector x(n_grid_);
    for (int i = 0; i < n_grid_; ++i) x[i] = -0.5 * L_ + L_ * i / n_grid_;
    return x;
  }

 private:
  void dealias(std::vector<std::complex<double>>& v) const {
    const int nk = n_grid_ / 2 + 1;
    for (int j = n_modes_ + 1; j < nk; ++j) v[j] = 0.0;
  }

  /// N(v) = -0.5 i k fft(ifft(v)^2), dealiased.
  void nonlinear(const std::vector<std::complex<double>>& v,
                 std::vector<std::complex<double>>& out) {
    std::vector<double> u(n_grid_);
    fft_.inverse(v.data(), u.data());
    for (auto& ui : u) ui *= ui;
    out.resize(n_grid_ / 2 + 1);
    fft_.forward(u.data(), out.data());
    for (int j = 0; j < n_grid_ / 2 + 1; ++j)
      out[j] *= std::complex<double>(0.0, -0.5 * k_[j]);
    dealias(out);
  }

  double L_;
  int n_modes_;
  int n_grid_;
  double dt_;
  detail::RealFft fft_;
  std::vector<double> k_;
  std::vector<double> E_, E2_, Q_, f1_, f2_, f3_;
};

/// Convenience wrapper matching the rest of the generator API.
inline TrajectorySet integrate_ks(double L, int n_modes, int n_grid, const Vector& u0,
                                  std::pair<double, double> t_span, double dt,
                                  int store_stride = 1) {
  KsSolver solver(L, n_modes, n_grid, dt);
  return solver.integrate(u0, t_span, store_stride);
}

}  // namespace ssm
