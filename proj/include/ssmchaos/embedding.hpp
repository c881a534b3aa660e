#pragma once

#include "ssmchaos/kdtree.hpp"
#include "ssmchaos/trajectory.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssm {

struct DelaySpec {
  int observable_index = 0;
  int m = 1;          // number of delays
  int lag_steps = 1;  // sampling lag T_s = lag_steps * dt

  void validate() const {
    if (m < 1 || lag_steps < 1)
      throw std::invalid_argument("DelaySpec: m and lag_steps must be >= 1");
  }
};

/// Stack delayed copies: y(t) = [s(t), s(t+T_s), ..., s(t+(m-1)T_s)].
inline TrajectorySet delay_embed(const TrajectorySet& series, const DelaySpec& spec) {
  spec.validate();
  if (!series.is_scalar())
    throw std::invalid_argument("delay_embed: input must be scalar-valued");
  TrajectorySet out;
  out.dt = series.dt;
  out.labels = series.labels;
  const Eigen::Index span = static_cast<Eigen::Index>(spec.m - 1) * spec.lag_steps;
  for (const auto& s : series.states) {
    if (s.rows() < span + 1) throw std::invalid_argument("delay_embed: series too short");
    const Eigen::Index n = s.rows() - span;
    Matrix y(n, spec.m);
    for (int j = 0; j < spec.m; ++j)
      y.col(j) = s.col(0).segment(static_cast<Eigen::Index>(j) * spec.lag_steps, n);
    out.states.push_back(std::move(y));
  }
  return out;
}

/// Histogram mutual information I(s(t); s(t+tau)) for one lag.
inline double mutual_information(const Vector& s, int tau, int n_bins) {
  const Eigen::Index n = s.size() - tau;
  if (n < 2) throw std::invalid_argument("mutual_information: lag too large");
  const double lo = s.minCoeff(), hi = s.maxCoeff();
  if (hi - lo <= 0.0) throw std::invalid_argument("mutual_information: degenerate series");
  const double scale = n_bins / (hi - lo);
  auto bin = [&](double v) {
    return std::min(n_bins - 1, static_cast<int>((v - lo) * scale));
  };
  std::vector<double> px(n_bins, 0.0), py(n_bins, 0.0);
  std::vector<double> pxy(static_cast<std::size_t>(n_bins) * n_bins, 0.0);
  const double w = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int bx = bin(s[i]), by = bin(s[i + tau]);
    px[bx] += w;
    py[by] += w;
    pxy[static_cast<std::size_t>(bx) * n_bins + by] += w;
  }
  double mi = 0.0;
  for (int i = 0; i < n_bins; ++i)
    for (int j = 0; j < n_bins; ++j) {
      const double p = pxy[static_cast<std::size_t>(i) * n_bins + j];
      if (p > 0.0) mi += p * std::log(p / (px[i] * py[j]));
    }
  return mi;
}

struct AmiResult {
  int lag = 0;                 // first local minimum (or max_lag if none)
  bool minimum_found = false;
  std::vector<double> curve;  // I(tau) for tau = 0..max_lag
};

/// Lag of the first local minimum of the average mutual information.
inline AmiResult ami_lag(const TrajectorySet& series, int max_lag, int n_bins = 64) {
  if (max_lag < 2) throw std::invalid_argument("ami_lag: max_lag must be >= 2");
  if (!series.is_scalar()) throw std::invalid_argument("ami_lag: input must be scalar");
  const Vector s = series.stacked().col(0);
  AmiResult res;
  res.curve.resize(max_lag + 1);
  for (int tau = 0; tau <= max_lag; ++tau) res.curve[tau] = mutual_information(s, tau, n_bins);
  // a first minimum must dominate a small neighborhood on both sides, which
  // keeps estimator noise on a still-falling curve from triggering early
  const int w = 3;
  for (int tau = 1; tau < max_lag; ++tau) {
    bool is_min = true;
    for (int j = std::max(1, tau - w); j <= std::min(max_lag, tau + w); ++j)
      if (res.curve[j] < res.curve[tau]) is_min = false;
    if (is_min && res.curve[tau] < res.curve[tau - 1]) {
      res.lag = tau;
      res.minimum_found = true;
      return res;
    }
  }
  res.lag = max_lag;
  res.minimum_found = false;
  return res;
}

struct FnnReport {
  std::vector<int> dims_tested;
  std::vector<double> fnn_percentage;  // in [0, 100]
  int chosen_dim = -1;                 // smallest tested dim below threshold
  double threshold = 0.0;
};

struct FnnOptions {
  double r_tol = 10.0;       // Kennel distance-ratio criterion
  double threshold_pct = 1.0;
  int theiler = 10;          // temporal exclusion window (samples)
  int lag_steps = 1;
  std::int64_t max_points = 20000;  // subsample cap for neighbor searches
};

/// False-nearest-neighbor percentages over candidate embedding dimensions.
/// A neighbor is false if adding the next delay coordinate stretches the
/// distance by more than r_tol, or beyond twice the attractor diameter.
inline FnnReport fnn_dimension(const TrajectorySet& series, const std::vector<int>& dims,
                               const FnnOptions& opts = {}) {
  if (!series.is_scalar()) throw std::invalid_argument("fnn_dimension: input must be scalar");
  if (opts.r_tol <= 1.0) throw std::invalid_argument("fnn_dimension: r_tol must exceed 1");
  for (std::size_t i = 1; i < dims.size(); ++i)
    if (dims[i] <= dims[i - 1]) throw std::invalid_argument("fnn_dimension: dims must ascend");

  const Vector s = series.stacked().col(0);
  const int max_dim = dims.back();
  const Eigen::Index span = static_cast<Eigen::Index>(max_dim) * opts.lag_steps;
  if (s.size() <= span) throw std::invalid_argument("fnn_dimension: insufficient data");
  const double diameter = s.maxCoeff() - s.minCoeff();

  FnnReport report;
  report.dims_tested = dims;
  report.threshold = opts.threshold_pct;
  for (int d : dims) {
    // embed at dimension d; the (d+1)-th coordinate is available for the test
    const Eigen::Index n_avail = s.size() - static_cast<Eigen::Index>(d) * opts.lag_steps;
    const Eigen::Index stride =
        std::max<Eigen::Index>(1, n_avail / opts.max_points);
    const Eigen::Index n = n_avail / stride;
    Matrix pts(n, d);
    Vector next(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index base = i * stride;
      for (int j = 0; j < d; ++j)
        pts(i, j) = s[base + static_cast<Eigen::Index>(j) * opts.lag_steps];
      next[i] = s[base + static_cast<Eigen::Index>(d) * opts.lag_steps];
    }
    KdTree tree(pts);
    const std::int64_t theiler = std::max<std::int64_t>(0, opts.theiler / stride);
    std::int64_t false_count = 0, total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto nb = tree.nearest(pts.row(i).transpose(), 1, i, theiler);
      if (nb.empty()) continue;
      const auto j = nb.front().index;
      const double dist = std::sqrt(nb.front().dist2);
      // near-duplicate points (e.g. exactly periodic signals) carry no
      // geometric information and make the distance ratio meaningless
      if (dist <= 1e-8 * diameter) continue;
      const double extra = std::abs(next[i] - next[j]);
      const double augmented = std::hypot(dist, extra);
      ++total;
      if (extra / dist > opts.r_tol || augmented > 2.0 * diameter) ++false_count;
    }
    const double pct = total > 0 ? 100.0 * false_count / total : 0.0;
    report.fnn_percentage.push_back(pct);
    if (report.chosen_dim < 0 && pct < opts.threshold_pct) report.chosen_dim = d;
  }
  return report;
}

}  // namespace ssm
