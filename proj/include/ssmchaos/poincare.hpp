#pragma once

#include "ssmchaos/systems.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ssm {

/// Stroboscopic samples at t = 0, period, 2*period, ... of each trajectory.
/// period must be an integer multiple of traj.dt.
inline TrajectorySet poincare_sample(const TrajectorySet& traj, double period) {
  const double ratio = period / traj.dt;
  const auto stride = static_cast<long long>(std::llround(ratio));
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-12 * ratio)
    throw std::invalid_argument("poincare_sample: period not commensurate with dt");
  TrajectorySet out;
  out.dt = period;
  out.labels = traj.labels;
  for (const auto& m : traj.states) {
    const Eigen::Index n = (m.rows() - 1) / stride + 1;
    Matrix sub(n, m.cols());
    for (Eigen::Index i = 0; i < n; ++i) sub.row(i) = m.row(i * stride);
    out.states.push_back(std::move(sub));
  }
  return out;
}

struct FixedPointResult {
  Vector state;
  double residual_norm = 0.0;
  std::vector<std::complex<double>> stability;  // map Jacobian eigenvalues
  Matrix map_jacobian;
};

/// Fixed point of the period map P of a periodically forced system, found by
/// Newton shooting with a finite-difference Jacobian. The stability field
/// holds the Floquet multipliers (eigenvalues of DP at the fixed point).
inline FixedPointResult find_map_fixed_point(const SystemSpec& spec, double period,
                                             const Vector& guess, double tol = 1e-10,
                                             int max_iter = 30, double dt_hint = 1e-3) {
  if (!spec.forcing)
    throw std::invalid_argument("find_map_fixed_point: spec must carry periodic forcing");
  if (spec.forcing->amplitude != 0.0) {
    const double forcing_period = 2.0 * M_PI / spec.forcing->frequency;
    const double cycles = period / forcing_period;
    if (std::abs(cycles - std::round(cycles)) > 1e-9 * cycles)
      throw std::invalid_argument("find_map_fixed_point: period incompatible with forcing");
  }
  const auto rhs = make_rhs(spec);
  const auto n_steps = std::max(1, static_cast<int>(std::llround(period / dt_hint)));
  const double dt = period / n_steps;
  const auto period_map = [&](const Vector& x) { return rk4_advance(rhs, x, 0.0, n_steps, dt); };

  const Eigen::Index n = guess.size();
  Vector x = guess;
  Vector res = period_map(x) - x;
  Matrix J(n, n);
  for (int iter = 0; iter < max_iter; ++iter) {
    if (res.norm() <= tol) break;
    // finite-difference Jacobian of P
    const double scale = std::max(1.0, x.norm());
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector xp = x, xm = x;
      const double h = 1e-6 * scale;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (period_map(xp) - period_map(xm)) / (2.0 * h);
    }
    Matrix A = J - Matrix::Identity(n, n);
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible())
      throw std::runtime_error("find_map_fixed_point: singular Jacobian");
    const Vector step = lu.solve(res);
    // damped update: halve the step until the residual actually shrinks
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      const Vector trial = x - alpha * step;
      try {
        const Vector trial_res = period_map(trial) - trial;
        if (trial_res.allFinite() && trial_res.norm() < res.norm()) {
          x = trial;
          res = trial_res;
          accepted = true;
          break;
        }
      } catch (const BlowUpError&) {
        // fall through to a smaller step
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw std::runtime_error("find_map_fixed_point: Newton iteration stalled");
  }
  if (res.norm() > tol)
    throw std::runtime_error("find_map_fixed_point: no convergence after max iterations");

  FixedPointResult out;
  out.state = x;
  out.residual_norm = res.norm();
  const double scale = std::max(1.0, x.norm());
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector xp = x, xm = x;
    const double h = 1e-6 * scale;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (period_map(xp) - period_map(xm)) / (2.0 * h);
  }
  out.map_jacobian = J;
  Eigen::EigenSolver<Matrix> es(J);
  for (Eigen::Index i = 0; i < n; ++i) out.stability.push_back(es.eigenvalues()[i]);
  return out;
}

}  // namespace ssm
