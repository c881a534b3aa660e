#pragma once

#include "ssmchaos/trajectory.hpp"

#include <functional>
#include <stdexcept>
#include <string>

namespace ssm {

/// Right-hand side f(t, x) of an ODE.
using OdeRhs = std::function<Vector(double, const Vector&)>;

struct BlowUpError : std::runtime_error {
  double time;
  explicit BlowUpError(double t)
      : std::runtime_error("non-finite state at t = " + std::to_string(t)), time(t) {}
};

/// One classical RK4 step.
inline Vector rk4_step(const OdeRhs& f, double t, const Vector& x, double dt) {
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Vector k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Vector k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step RK4 over [t0, t0 + n_steps*dt], storing every step.
/// Throws BlowUpError (with the offending time) if the state goes non-finite.
inline Matrix rk4_integrate(const OdeRhs& f, const Vector& x0, double t0, int n_steps,
                            double dt) {
  if (dt <= 0.0) throw std::invalid_argument("rk4_integrate: dt must be positive");
  Matrix out(n_steps + 1, x0.size());
  Vector x = x0;
  out.row(0) = x.transpose();
  for (int i = 0; i < n_steps; ++i) {
    x = rk4_step(f, t0 + i * dt, x, dt);
    if (!x.allFinite()) throw BlowUpError(t0 + (i + 1) * dt);
    out.row(i + 1) = x.transpose();
  }
  return out;
}

/// Integrate without storing intermediate samples; returns the final state.
inline Vector rk4_advance(const OdeRhs& f, const Vector& x0, double t0, int n_steps,
                          double dt) {
  Vector x = x0;
  for (int i = 0; i < n_steps; ++i) {
    x = rk4_step(f, t0 + i * dt, x, dt);
    if (!x.allFinite()) throw BlowUpError(t0 + (i + 1) * dt);
  }
  return x;
}

}  // namespace ssm
