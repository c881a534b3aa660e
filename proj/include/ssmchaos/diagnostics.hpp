#pragma once

#include "ssmchaos/rng.hpp"
#include "ssmchaos/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ssm {

struct NmteResult {
  Vector curve;           // cumulative NMTE(t), one entry per sample
  double normalization;   // max reference norm

  /// First time the curve exceeds `threshold`; returns last time + dt if it
  /// never does (the horizon extends past the data).
  double horizon(double threshold, double dt) const {
    for (Eigen::Index i = 0; i < curve.size(); ++i)
      if (curve[i] > threshold) return static_cast<double>(i) * dt;
    return static_cast<double>(curve.size()) * dt;
  }
};

/// Cumulative normalized mean trajectory error:
/// NMTE(t) = [ mean_{i<=t} ||y_i - yhat_i|| ] / max_i ||y_i||.
inline NmteResult nmte(const Matrix& reference, const Matrix& predicted) {
  if (reference.rows() != predicted.rows() || reference.cols() != predicted.cols())
    throw std::invalid_argument("nmte: shape mismatch");
  const double norm = reference.rowwise().norm().maxCoeff();
  if (norm <= 0.0) throw std::invalid_argument("nmte: zero reference norm");
  NmteResult out;
  out.normalization = norm;
  out.curve.resize(reference.rows());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    acc += (reference.row(i) - predicted.row(i)).norm();
    out.curve[i] = acc / (static_cast<double>(i + 1) * norm);
  }
  return out;
}

inline NmteResult nmte(const TrajectorySet& reference, const TrajectorySet& predicted) {
  if (reference.states.size() != 1 || predicted.states.size() != 1)
    throw std::invalid_argument("nmte: expects single trajectories");
  if (std::abs(reference.dt - predicted.dt) > 1e-12 * reference.dt)
    throw std::invalid_argument("nmte: dt mismatch");
  return nmte(reference.states.front(), predicted.states.front());
}

struct LyapunovEstimate {
  double mle = 0.0;
  double fit_r2 = 0.0;
  std::pair<double, double> fit_window{0.0, 0.0};
  double lyapunov_time = 0.0;  // 1/mle when mle > 0
  std::vector<double> per_trial;
  bool chaotic = true;  // false when no good positive-slope linear fit exists
  int failed_trials = 0;
  Vector separation_curve;  // lambda(t) of the last evaluated pair
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(const Vector& x, const Vector& y) {
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  const double syy = (y.array() - my).square().sum();
  LineFit f;
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

/// lambda(t) = log(||xA(t) - xB(t)|| / ||eps0||).
inline Vector separation_curve(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("separation_curve: shape mismatch");
  const double eps0 = (a.row(0) - b.row(0)).norm();
  if (eps0 <= 0.0) throw std::invalid_argument("separation_curve: zero initial separation");
  Vector lam(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double sep = (a.row(i) - b.row(i)).norm();
    if (sep <= 0.0)
      throw std::runtime_error("separation_curve: separation reached zero (log singularity)");
    lam[i] = std::log(sep / eps0);
  }
  return lam;
}

/// Coordinate-range diameter of the attractor sampled by a trajectory.
inline double range_diameter(const Matrix& a) {
  return (a.colwise().maxCoeff() - a.colwise().minCoeff()).norm();
}

/// Window [0.5, 0.8] * t1 where t1 is the time the separation first reaches
/// `target_growth` times eps0 (the near-saturation point of the log plot).
inline std::pair<double, double> auto_window(const Vector& lambda_curve, double dt,
                                             double target_growth) {
  const double target = std::log(target_growth);
  Eigen::Index t1 = lambda_curve.size() - 1;
  for (Eigen::Index i = 0; i < lambda_curve.size(); ++i) {
    if (lambda_curve[i] >= target) {
      t1 = i;
      break;
    }
  }
  const double t1_time = std::max(static_cast<double>(t1) * dt, 10.0 * dt);
  return {0.5 * t1_time, 0.8 * t1_time};
}

inline LineFit fit_line_window(const Vector& lam, double dt, double t_start, double t_end) {
  const auto i0 = static_cast<Eigen::Index>(t_start / dt);
  const auto i1 = std::min<Eigen::Index>(static_cast<Eigen::Index>(t_end / dt), lam.size() - 1);
  if (i0 >= i1 || i1 >= lam.size())
    throw std::invalid_argument("fit window exceeds data");
  Vector t(i1 - i0 + 1), y(i1 - i0 + 1);
  for (Eigen::Index i = i0; i <= i1; ++i) {
    t[i - i0] = static_cast<double>(i) * dt;
    y[i - i0] = lam[i];
  }
  return fit_line(t, y);
}

/// Best r^2 among positive-slope fits over a family of sub-windows of the
/// growth phase [0, t1]. Returns 0 when no window has a positive slope.
inline double best_positive_fit_r2(const Vector& lam, double dt, double t1) {
  double best = 0.0;
  for (const double frac : {0.25, 0.4, 0.6, 0.8, 1.0}) {
    const double len = std::max(frac * t1, 10.0 * dt);
    for (double start = 0.0; start + len <= t1 + 1e-12; start += 0.5 * len) {
      LineFit f;
      try {
        f = fit_line_window(lam, dt, start, start + len);
      } catch (const std::exception&) {
        continue;
      }
      if (f.slope > 0.0) best = std::max(best, f.r2);
    }
  }
  return best;
}

}  // namespace detail

/// Maximal Lyapunov exponent from one nearby-trajectory pair: linear fit to
/// the log separation over fit_window (auto-detected when absent).
inline LyapunovEstimate mle_from_pair(const TrajectorySet& trajA, const TrajectorySet& trajB,
                                      std::optional<std::pair<double, double>> fit_window = {},
                                      double sep_fraction = 1e-2) {
  if (trajA.states.size() != 1 || trajB.states.size() != 1)
    throw std::invalid_argument("mle_from_pair: expects single trajectories");
  const Matrix& a = trajA.states.front();
  const Matrix& b = trajB.states.front();
  const double dt = trajA.dt;
  const Vector lam = detail::separation_curve(a, b);
  const double eps0 = (a.row(0) - b.row(0)).norm();
  const double growth = sep_fraction * detail::range_diameter(a) / eps0;
  const auto window = fit_window ? *fit_window : detail::auto_window(lam, dt, growth);
  detail::LineFit fit;
  try {
    fit = detail::fit_line_window(lam, dt, window.first, window.second);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("mle_from_pair: fit window exceeds data");
  }
  LyapunovEstimate est;
  est.mle = fit.slope;
  est.fit_r2 = fit.r2;
  est.fit_window = window;
  est.lyapunov_time = fit.slope > 0.0 ? 1.0 / fit.slope : 0.0;
  // verdict: some window within the growth phase must carry a clean
  // positive-slope fit
  const double t1 = window.second / 0.8;
  est.chaotic = fit.slope > 0.0 && detail::best_positive_fit_r2(lam, dt, t1) >= 0.9;
  est.separation_curve = lam;
  est.per_trial = {fit.slope};
  return est;
}

/// Forecast hook for ensemble estimates: produce a trajectory matrix of
/// n_steps + 1 rows from an initial state.
using ForecastFn = std::function<Matrix(const Vector& x0, int n_steps)>;

/// Repeats mle_from_pair over random on-attractor base points with random
/// perturbation directions of norm eps0. Failed or non-chaotic trials are
/// excluded and counted.
inline LyapunovEstimate mle_ensemble(const ForecastFn& forecaster, const Matrix& base_points,
                                     int n_trials, double eps0, double dt, double horizon_time,
                                     Pcg64& rng,
                                     std::optional<std::pair<double, double>> fit_window = {},
                                     double sep_fraction = 1e-2) {
  if (n_trials < 1) throw std::invalid_argument("mle_ensemble: n_trials must be >= 1");
  if (base_points.rows() < 1) throw std::invalid_argument("mle_ensemble: no base points");
  const int n_steps = static_cast<int>(horizon_time / dt);
  const auto dim = base_points.cols();
  LyapunovEstimate out;
  double sum = 0.0, sum_r2 = 0.0, sum_best_r2 = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    const Vector x0 =
        base_points.row(static_cast<Eigen::Index>(rng.below(base_points.rows()))).transpose();
    Vector dir(dim);
    for (Eigen::Index j = 0; j < dim; ++j) dir[j] = rng.normal();
    dir *= eps0 / dir.norm();
    try {
      const Matrix a = forecaster(x0, n_steps);
      const Matrix b = forecaster(x0 + dir, n_steps);
      const Eigen::Index n = std::min(a.rows(), b.rows());
      const Vector lam = detail::separation_curve(a.topRows(n), b.topRows(n));
      const double growth = sep_fraction * detail::range_diameter(a.topRows(n)) / eps0;
      const auto window =
          fit_window ? *fit_window : detail::auto_window(lam, dt, growth);
      const auto fit = detail::fit_line_window(lam, dt, window.first, window.second);
      out.per_trial.push_back(fit.slope);
      sum += fit.slope;
      sum_r2 += fit.r2;
      sum_best_r2 += detail::best_positive_fit_r2(lam, dt, window.second / 0.8);
      out.separation_curve = lam;
      out.fit_window = window;
    } catch (const std::exception&) {
      ++out.failed_trials;
    }
  }
  if (out.per_trial.empty())
    throw std::runtime_error("mle_ensemble: every trial failed");
  out.mle = sum / static_cast<double>(out.per_trial.size());
  out.fit_r2 = sum_r2 / static_cast<double>(out.per_trial.size());
  out.lyapunov_time = out.mle > 0.0 ? 1.0 / out.mle : 0.0;
  // chaotic verdict: some growth-phase window must carry a clean
  // positive-slope fit, on average over trials
  out.chaotic =
      out.mle > 0.0 && sum_best_r2 / static_cast<double>(out.per_trial.size()) >= 0.9;
  return out;
}

/// Lyapunov estimate from model-versus-reference divergence: each trial
/// perturbs a state drawn from the reference trajectory, forecasts with the
/// model, and fits the log separation between the forecast and the reference
/// segment over `fit_window`. The growth is seeded by the model's one-step
/// error, so the usable window starts much earlier than for a true nearby
/// pair; the exponent of the reference dynamics dominates the slope as long
/// as the model shadows the attractor.
inline LyapunovEstimate mle_reference_ensemble(const ForecastFn& forecaster,
                                               const Matrix& reference, int n_trials,
                                               double eps0, double dt, Pcg64& rng,
                                               std::pair<double, double> fit_window) {
  if (n_trials < 1)
    throw std::invalid_argument("mle_reference_ensemble: n_trials must be >= 1");
  const auto n_steps = static_cast<Eigen::Index>(std::ceil(1.25 * fit_window.second / dt));
  if (reference.rows() < n_steps + 2)
    throw std::invalid_argument("mle_reference_ensemble: reference too short");
  const auto dim = reference.cols();
  LyapunovEstimate out;
  double sum = 0.0, sum_r2 = 0.0, sum_best_r2 = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    const auto i0 = static_cast<Eigen::Index>(rng.below(reference.rows() - n_steps - 1));
    const Vector x0 = reference.row(i0).transpose();
    Vector dir(dim);
    for (Eigen::Index j = 0; j < dim; ++j) dir[j] = rng.normal();
    dir *= eps0 / dir.norm();
    try {
      const Matrix b = forecaster(x0 + dir, static_cast<int>(n_steps));
      const Eigen::Index n = std::min(b.rows(), n_steps + 1);
      const Vector lam = detail::separation_curve(reference.middleRows(i0, n), b.topRows(n));
      const auto fit = detail::fit_line_window(lam, dt, fit_window.first, fit_window.second);
      out.per_trial.push_back(fit.slope);
      sum += fit.slope;
      sum_r2 += fit.r2;
      sum_best_r2 += detail::best_positive_fit_r2(lam, dt, fit_window.second / 0.8);
      out.separation_curve = lam;
      out.fit_window = fit_window;
    } catch (const std::exception&) {
      ++out.failed_trials;
    }
  }
  if (out.per_trial.empty())
    throw std::runtime_error("mle_reference_ensemble: every trial failed");
  out.mle = sum / static_cast<double>(out.per_trial.size());
  out.fit_r2 = sum_r2 / static_cast<double>(out.per_trial.size());
  out.lyapunov_time = out.mle > 0.0 ? 1.0 / out.mle : 0.0;
  out.chaotic =
      out.mle > 0.0 && sum_best_r2 / static_cast<double>(out.per_trial.size()) >= 0.9;
  return out;
}

/// Maximal Lyapunov exponent by renormalized nearby-pair averaging: a
/// companion state offset by `d0` is evolved alongside the base state, its
/// log growth accumulated, and the offset rescaled back to `d0` every `tau`
/// time units. Averaging local expansion over many segments gives far lower
/// variance than a single pair. `step(x, tau)` advances the state in place
/// and returns false on failure (e.g. trajectory escape); returns nullopt in
/// that case.
template <class StepFn>
std::optional<double> benettin_mle(StepFn&& step, Vector x, double d0 = 1e-7,
                                   double tau = 1.0, int n_renorm = 200,
                                   double t_settle = 20.0) {
  if (t_settle > 0.0 && !step(x, t_settle)) return std::nullopt;
  Vector y = x;
  y[0] += d0;
  double acc = 0.0;
  for (int i = 0; i < n_renorm; ++i) {
    if (!step(x, tau) || !step(y, tau)) return std::nullopt;
    const double d = (y - x).norm();
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    acc += std::log(d / d0);
    y = x + (y - x) * (d0 / d);
  }
  return acc / (n_renorm * tau);
}

struct CoordinateDensity {
  Vector grid;
  Vector density_ref;
  Vector density_model;
  double l1_distance = 0.0;
};

struct DensityComparison {
  std::vector<CoordinateDensity> per_coordinate;
  std::vector<double> bandwidths;
  double max_l1() const {
    double m = 0.0;
    for (const auto& c : per_coordinate) m = std::max(m, c.l1_distance);
    return m;
  }
};

namespace detail {

inline double silverman_bandwidth(const Vector& x) {
  const double n = static_cast<double>(x.size());
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / (n - 1.0));
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  const auto q = [&](double p) {
    const double idx = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(idx);
    const double frac = idx - static_cast<double>(lo);
    return lo + 1 < sorted.size() ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
                                  : sorted[lo];
  };
  const double iqr = q(0.75) - q(0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian KDE evaluated on a uniform grid via sample binning (nearest bin)
/// followed by kernel convolution; renormalized to integrate to one.
inline Vector binned_kde(const Vector& samples, const Vector& grid, double bandwidth) {
  const Eigen::Index ng = grid.size();
  const double lo = grid[0], hi = grid[ng - 1];
  const double dx = (hi - lo) / static_cast<double>(ng - 1);
  Vector counts = Vector::Zero(ng);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double pos = (samples[i] - lo) / dx;
    const auto bin = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(pos)), 0,
                                              ng - 1);
    counts[bin] += 1.0;
  }
  counts /= static_cast<double>(samples.size());
  const auto reach = std::min<Eigen::Index>(
      ng, static_cast<Eigen::Index>(std::ceil(6.0 * bandwidth / dx)) + 1);
  Vector kernel(reach);
  const double inv = 1.0 / (bandwidth * std::sqrt(2.0 * M_PI));
  for (Eigen::Index j = 0; j < reach; ++j) {
    const double u = static_cast<double>(j) * dx / bandwidth;
    kernel[j] = inv * std::exp(-0.5 * u * u);
  }
  Vector density = Vector::Zero(ng);
  for (Eigen::Index i = 0; i < ng; ++i) {
    if (counts[i] == 0.0) continue;
    const Eigen::Index j0 = std::max<Eigen::Index>(0, i - reach + 1);
    const Eigen::Index j1 = std::min<Eigen::Index>(ng - 1, i + reach - 1);
    for (Eigen::Index j = j0; j <= j1; ++j)
      density[j] += counts[i] * kernel[std::abs(j - i)];
  }
  const double mass = density.sum() * dx;
  if (mass > 0.0) density /= mass;
  return density;
}

}  // namespace detail

struct DensityOptions {
  int n_grid = 512;
  double padding = 0.1;           // relative grid padding beyond the data range
  bool shared_bandwidth = true;   // reference bandwidth reused for the model data
};

/// Per-coordinate kernel density estimates on a shared grid with Silverman
/// bandwidth from the reference; reports the L1 distance per coordinate.
inline DensityComparison density_compare(const TrajectorySet& reference,
                                         const TrajectorySet& modeled,
                                         const DensityOptions& opts = {}) {
  if (reference.state_dim() != modeled.state_dim())
    throw std::invalid_argument("density_compare: state dimension mismatch");
  if (reference.total_samples() == 0 || modeled.total_samples() == 0)
    throw std::invalid_argument("density_compare: empty data");
  const Matrix ref = reference.stacked();
  const Matrix mod = modeled.stacked();
  DensityComparison out;
  for (Eigen::Index c = 0; c < ref.cols(); ++c) {
    const Vector rx = ref.col(c);
    const Vector mx = mod.col(c);
    const double lo = std::min(rx.minCoeff(), mx.minCoeff());
    const double hi = std::max(rx.maxCoeff(), mx.maxCoeff());
    const double pad = opts.padding * std::max(hi - lo, 1e-12);
    Vector grid(opts.n_grid);
    for (int i = 0; i < opts.n_grid; ++i)
      grid[i] = lo - pad + (hi - lo + 2.0 * pad) * i / (opts.n_grid - 1);
    const double bw_ref = detail::silverman_bandwidth(rx);
    const double bw_mod = opts.shared_bandwidth ? bw_ref : detail::silverman_bandwidth(mx);
    CoordinateDensity cd;
    cd.grid = grid;
    cd.density_ref = detail::binned_kde(rx, grid, bw_ref);
    cd.density_model = detail::binned_kde(mx, grid, bw_mod);
    const double dx = grid[1] - grid[0];
    cd.l1_distance = (cd.density_ref - cd.density_model).cwiseAbs().sum() * dx;
    out.per_coordinate.push_back(std::move(cd));
    out.bandwidths.push_back(bw_ref);
  }
  return out;
}

}  // namespace ssm
