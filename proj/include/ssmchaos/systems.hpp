#pragma once

#include "ssmchaos/rk4.hpp"
#include "ssmchaos/trajectory.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace ssm {

enum class SystemName { Lorenz3, Lorenz9, Rossler, DuffingChain, KuramotoSivashinsky, BistableAnalog };

struct Forcing {
  double amplitude = 0.0;
  double frequency = 0.0;  // rad/s
  double phase = 0.0;      // rad
};

/// Named benchmark system with its parameter map and optional harmonic forcing.
struct SystemSpec {
  SystemName name;
  std::map<std::string, double> parameters;
  std::optional<Forcing> forcing;

  double param(const std::string& key) const {
    auto it = parameters.find(key);
    if (it == parameters.end())
      throw std::invalid_argument("SystemSpec: missing parameter '" + key + "'");
    if (!std::isfinite(it->second))
      throw std::invalid_argument("SystemSpec: non-finite parameter '" + key + "'");
    return it->second;
  }
};

inline SystemSpec lorenz3_spec(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0) {
  return {SystemName::Lorenz3, {{"sigma", sigma}, {"rho", rho}, {"beta", beta}}, std::nullopt};
}

inline SystemSpec lorenz9_spec(double sigma = 0.5, double r = 14.2, double a = 0.5) {
  return {SystemName::Lorenz9, {{"sigma", sigma}, {"r", r}, {"a", a}}, std::nullopt};
}

inline SystemSpec rossler_spec(double a = 0.2, double b = 0.2, double c = 5.7) {
  return {SystemName::Rossler, {{"a", a}, {"b", b}, {"c", c}}, std::nullopt};
}

/// Oscillator chain with one cubic spring on the third (heavy) mass,
/// harmonically forced there.
inline SystemSpec duffing_chain_spec(double amplitude = 2.25, double frequency = 2.0) {
  SystemSpec spec{SystemName::DuffingChain,
                  {{"m_small", 0.1}, {"c_small", 0.75}, {"c3", 0.1}, {"beta", 0.25}},
                  std::nullopt};
  spec.forcing = Forcing{amplitude, frequency, 0.0};
  return spec;
}

/// Two-DOF stand-in for a buckling structure: one bistable slow DOF coupled
/// to a damped linear fast DOF, optional harmonic forcing on the bistable DOF.
/// State ordering (x1, x2, v1, v2). The origin is an unstable equilibrium with
/// one positive real eigenvalue; the two buckled states are stable.
inline SystemSpec bistable_analog_spec() {
  return {SystemName::BistableAnalog,
          {{"c1", 0.25}, {"k1", 1.0}, {"beta", 1.0}, {"kappa", 0.02}, {"c2", 1.0}, {"k2", 25.0}},
          std::nullopt};
}

inline int state_dimension(const SystemSpec& spec) {
  switch (spec.name) {
    case SystemName::Lorenz3:
    case SystemName::Rossler: return 3;
    case SystemName::Lorenz9: return 9;
    case SystemName::DuffingChain: return 8;
    case SystemName::BistableAnalog: return 4;
    case SystemName::KuramotoSivashinsky:
      throw std::invalid_argument("KS state dimension is grid-dependent; use KsSolver");
  }
  throw std::logic_error("unreachable");
}

/// Build the ODE right-hand side for a system spec.
inline OdeRhs make_rhs(const SystemSpec& spec) {
  if (spec.forcing &&
      spec.name != SystemName::DuffingChain && spec.name != SystemName::BistableAnalog)
    throw std::invalid_argument("forcing is only supported for DuffingChain and BistableAnalog");
  switch (spec.name) {
    case SystemName::Lorenz3: {
      const double sigma = spec.param("sigma"), rho = spec.param("rho"), beta = spec.param("beta");
      return [=](double, const Vector& s) {
        Vector d(3);
        d[0] = sigma * (s[1] - s[0]);
        d[1] = s[0] * (rho - s[2]) - s[1];
        d[2] = s[0] * s[1] - beta * s[2];
        return d;
      };
    }
    case SystemName::Lorenz9: {
      const double sigma = spec.param("sigma"), r = spec.param("r"), a = spec.param("a");
      const double a2 = a * a;
      const double b1 = 4.0 * (1.0 + a2) / (1.0 + 2.0 * a2);
      const double b2 = (1.0 + 2.0 * a2) / (2.0 * (1.0 + a2));
      const double b3 = 2.0 * (1.0 - a2) / (1.0 + a2);
      const double b4 = a2 / (1.0 + a2);
      const double b5 = 8.0 * a2 / (1.0 + 2.0 * a2);
      const double b6 = 4.0 / (1.0 + 2.0 * a2);
      return [=](double, const Vector& C0) {
        const Vector& C = C0;  // 1-based in the equations below via C[i-1]
        Vector d(9);
        d[0] = -sigma * b1 * C[0] - C[1] * C[3] + b4 * C[3] * C[3] + b3 * C[2] * C[4] -
               sigma * b2 * C[6];
        d[1] = -sigma * C[1] + C[0] * C[3] - C[1] * C[4] + C[3] * C[4] - 0.5 * sigma * C[8];
        d[2] = -sigma * b1 * C[2] + C[1] * C[3] - b4 * C[1] * C[1] - b3 * C[0] * C[4] +
               sigma * b2 * C[7];
        d[3] = -sigma * C[3] + C[1] * C[2] - C[1] * C[4] + C[3] * C[4] + 0.5 * sigma * C[8];
        d[4] = -sigma * b5 * C[4] + 0.5 * C[1] * C[1] - 0.5 * C[3] * C[3];
        d[5] = -b6 * C[5] + C[1] * C[8] - C[3] * C[8];
        d[6] = -b1 * C[6] - r * C[0] + 2.0 * C[4] * C[7] - C[3] * C[8];
        d[7] = -b1 * C[7] + r * C[2] - 2.0 * C[4] * C[6] + C[1] * C[8];
        d[8] = -C[8] - r * C[1] + r * C[3] - 2.0 * C[1] * C[5] + 2.0 * C[3] * C[5] +
               C[3] * C[6] - C[1] * C[7];
        return d;
      };
    }
    case SystemName::Rossler: {
      const double a = spec.param("a"), b = spec.param("b"), c = spec.param("c");
      return [=](double, const Vector& s) {
        Vector d(3);
        d[0] = -s[1] - s[2];
        d[1] = s[0] + a * s[1];
        d[2] = b + s[2] * (s[0] - c);
        return d;
      };
    }
    case SystemName::DuffingChain: {
      const double ms = spec.param("m_small"), cs = spec.param("c_small");
      const double c3 = spec.param("c3"), beta = spec.param("beta");
      const double F = spec.forcing ? spec.forcing->amplitude : 0.0;
      const double Om = spec.forcing ? spec.forcing->frequency : 1.0;
      const double ph = spec.forcing ? spec.forcing->phase : 0.0;
      // state (x1..x4, v1..v4)
      return [=](double t, const Vector& s) {
        Vector d(8);
        d[0] = s[4];
        d[1] = s[5];
        d[2] = s[6];
        d[3] = s[7];
        d[4] = (-cs * s[4] - 2.0 * s[0] + s[1]) / ms;
        d[5] = (-cs * s[5] + s[0] - 2.0 * s[1] + s[2]) / ms;
        d[6] = -c3 * s[6] + s[1] + s[2] + s[3] - beta * s[2] * s[2] * s[2] +
               F * std::cos(Om * t + ph);
        d[7] = (-cs * s[7] + s[2] - 3.0 * s[3]) / ms;
        return d;
      };
    }
    case SystemName::BistableAnalog: {
      const double c1 = spec.param("c1"), k1 = spec.param("k1"), beta = spec.param("beta");
      const double kap = spec.param("kappa"), c2 = spec.param("c2"), k2 = spec.param("k2");
      const double F = spec.forcing ? spec.forcing->amplitude : 0.0;
      const double Om = spec.forcing ? spec.forcing->frequency : 1.0;
      const double ph = spec.forcing ? spec.forcing->phase : 0.0;
      // state (x1, x2, v1, v2)
      return [=](double t, const Vector& s) {
        Vector d(4);
        d[0] = s[2];
        d[1] = s[3];
        d[2] = -c1 * s[2] + k1 * s[0] - beta * s[0] * s[0] * s[0] - kap * (s[0] - s[1]) +
               F * std::cos(Om * t + ph);
        d[3] = -c2 * s[3] - k2 * s[1] - kap * (s[1] - s[0]);
        return d;
      };
    }
    case SystemName::KuramotoSivashinsky:
      throw std::invalid_argument("use KsSolver for Kuramoto-Sivashinsky");
  }
  throw std::logic_error("unreachable");
}

/// Fixed-step RK4 trajectory of a system, sampled every dt over t_span.
inline TrajectorySet integrate(const SystemSpec& spec, const Vector& x0,
                               std::pair<double, double> t_span, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("integrate: dt must be positive");
  if (x0.size() != state_dimension(spec))
    throw std::invalid_argument("integrate: initial condition dimension mismatch");
  const auto n_steps = static_cast<int>(std::llround((t_span.second - t_span.first) / dt));
  TrajectorySet out;
  out.dt = dt;
  out.states.push_back(rk4_integrate(make_rhs(spec), x0, t_span.first, n_steps, dt));
  return out;
}

/// Finite-difference Jacobian of the autonomous vector field at a state.
inline Matrix numerical_jacobian(const OdeRhs& f, const Vector& x, double t = 0.0,
                                 double h = 1e-6) {
  const Eigen::Index n = x.size();
  Matrix J(f(t, x).size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector xp = x, xm = x;
    const double step = h * std::max(1.0, std::abs(x[j]));
    xp[j] += step;
    xm[j] -= step;
    J.col(j) = (f(t, xp) - f(t, xm)) / (2.0 * step);
  }
  return J;
}

}  // namespace ssm
