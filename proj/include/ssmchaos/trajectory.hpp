#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Uniformly sampled multivariate time series. Each trajectory is an
/// (n_samples x state_dim) matrix; all trajectories share state_dim and dt.
struct TrajectorySet {
  std::vector<Matrix> states;
  double dt = 0.0;
  std::vector<std::string> labels;

  TrajectorySet() = default;
  TrajectorySet(std::vector<Matrix> s, double step) : states(std::move(s)), dt(step) {
    validate();
  }

  int state_dim() const { return states.empty() ? 0 : static_cast<int>(states.front().cols()); }
  std::size_t n_trajectories() const { return states.size(); }

  std::size_t total_samples() const {
    std::size_t n = 0;
    for (const auto& m : states) n += static_cast<std::size_t>(m.rows());
    return n;
  }

  /// Stack all trajectories into one (total_samples x state_dim) matrix.
  Matrix stacked() const {
    Matrix out(total_samples(), state_dim());
    Eigen::Index row = 0;
    for (const auto& m : states) {
      out.middleRows(row, m.rows()) = m;
      row += m.rows();
    }
    return out;
  }

  bool is_scalar() const { return state_dim() == 1; }

  void validate() const {
    if (dt <= 0.0) throw std::invalid_argument("TrajectorySet: dt must be positive");
    const int dim = state_dim();
    for (const auto& m : states) {
      if (m.cols() != dim)
        throw std::invalid_argument("TrajectorySet: inconsistent state dimension");
      if (!m.allFinite())
        throw std::invalid_argument("TrajectorySet: non-finite entries");
    }
  }

  /// Largest row norm over all trajectories.
  double max_norm() const {
    double mx = 0.0;
    for (const auto& m : states) mx = std::max(mx, m.rowwise().norm().maxCoeff());
    return mx;
  }

  /// Drop the first `t_cut` time units from every trajectory.
  TrajectorySet truncated(double t_cut) const {
    const auto skip = static_cast<Eigen::Index>(t_cut / dt);
    TrajectorySet out;
    out.dt = dt;
    out.labels = labels;
    for (const auto& m : states) {
      if (skip >= m.rows()) throw std::invalid_argument("truncated: cut exceeds trajectory");
      out.states.push_back(m.bottomRows(m.rows() - skip));
    }
    return out;
  }

  /// Keep every `stride`-th sample; dt scales accordingly.
  TrajectorySet subsampled(int stride) const {
    if (stride < 1) throw std::invalid_argument("subsampled: stride must be >= 1");
    TrajectorySet out;
    out.dt = dt * stride;
    out.labels = labels;
    for (const auto& m : states) {
      const Eigen::Index n = (m.rows() + stride - 1) / stride;
      Matrix sub(n, m.cols());
      for (Eigen::Index i = 0; i < n; ++i) sub.row(i) = m.row(i * stride);
      out.states.push_back(std::move(sub));
    }
    return out;
  }

  /// Extract one coordinate as a scalar TrajectorySet.
  TrajectorySet coordinate(int idx) const {
    if (idx < 0 || idx >= state_dim()) throw std::out_of_range("coordinate index");
    TrajectorySet out;
    out.dt = dt;
    out.labels = labels;
    for (const auto& m : states) out.states.push_back(m.col(idx));
    return out;
  }

  /// Subtract a constant offset from every sample.
  TrajectorySet shifted(const Vector& offset) const {
    TrajectorySet out;
    out.dt = dt;
    out.labels = labels;
    for (const auto& m : states)
      out.states.push_back(m.rowwise() - offset.transpose());
    return out;
  }
};

}  // namespace ssm
