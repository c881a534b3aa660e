#pragma once

#include "ssmchaos/kdtree.hpp"
#include "ssmchaos/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace ssm {

/// Zeroth-order local predictor: stores (eta_j, eta_j+) training pairs one
/// sampling step apart and forecasts by an inverse-distance-weighted convex
/// combination of the successors of the k nearest neighbors.
class KnnModel {
 public:
  KnnModel() = default;

  KnnModel(Matrix points, Matrix successors, int k, double dt, int theiler = 0)
      : points_(std::move(points)),
        successors_(std::move(successors)),
        k_(k),
        dt_(dt),
        theiler_(theiler) {
    if (points_.rows() != successors_.rows() || points_.cols() != successors_.cols())
      throw std::invalid_argument("KnnModel: pair shape mismatch");
    if (k_ < 1) throw std::invalid_argument("KnnModel: k must be >= 1");
    if (points_.rows() < k_ + theiler_ + 1)
      throw std::invalid_argument("KnnModel: not enough training pairs for k");
    tree_ = KdTree(points_);
  }

  int k() const { return k_; }
  double dt() const { return dt_; }
  int dim() const { return static_cast<int>(points_.cols()); }
  std::int64_t n_pairs() const { return points_.rows(); }
  const Matrix& points() const { return points_; }
  const Matrix& successors() const { return successors_; }
  int theiler() const { return theiler_; }

  /// One prediction step. `replay_index` activates the Theiler exclusion
  /// window when the query is a replayed training sample.
  Vector step(const Vector& eta, std::int64_t replay_index = -1) const {
    if (points_.rows() == 0) throw std::runtime_error("KnnModel: empty model");
    const auto nbrs = tree_.nearest(eta, k_, replay_index,
                                    replay_index >= 0 ? theiler_ : -1);
    if (nbrs.empty()) throw std::runtime_error("KnnModel: no admissible neighbors");
    // exact hit: return the stored successor directly
    if (nbrs.front().dist2 == 0.0) return successors_.row(nbrs.front().index).transpose();
    double wsum = 0.0;
    Vector pred = Vector::Zero(points_.cols());
    for (const auto& nb : nbrs) {
      const double w = 1.0 / std::sqrt(nb.dist2);
      pred += w * successors_.row(nb.index).transpose();
      wsum += w;
    }
    return pred / wsum;
  }

 private:
  Matrix points_;
  Matrix successors_;
  int k_ = 0;
  double dt_ = 0.0;
  int theiler_ = 0;
  KdTree tree_;
};

/// Build a kNN model from reduced trajectories; the last sample of each
/// trajectory has no successor and is excluded.
inline KnnModel knn_build(const TrajectorySet& etas, int k, int theiler = 0) {
  std::size_t n_pairs = 0;
  for (const auto& m : etas.states) {
    if (m.rows() < 2) throw std::invalid_argument("knn_build: need >= 2 samples");
    n_pairs += static_cast<std::size_t>(m.rows() - 1);
  }
  Matrix pts(n_pairs, etas.state_dim()), succ(n_pairs, etas.state_dim());
  Eigen::Index row = 0;
  for (const auto& m : etas.states) {
    pts.middleRows(row, m.rows() - 1) = m.topRows(m.rows() - 1);
    succ.middleRows(row, m.rows() - 1) = m.bottomRows(m.rows() - 1);
    row += m.rows() - 1;
  }
  return KnnModel(std::move(pts), std::move(succ), k, etas.dt, theiler);
}

inline Vector knn_step(const KnnModel& model, const Vector& eta,
                       std::int64_t replay_index = -1) {
  return model.step(eta, replay_index);
}

struct KnnForecastResult {
  TrajectorySet trajectory;
  bool blew_up = false;
};

/// Iterate the predictor from eta0. `dt` must equal the training sampling
/// step the model was built with. Convex combinations keep iterates inside
/// the successor bounding box, so the bound check is a pure safety net.
inline KnnForecastResult forecast(const KnnModel& model, const Vector& eta0, int n_steps,
                                  double dt, double bound = 1e12) {
  if (std::abs(dt - model.dt()) > 1e-12 * std::max(1.0, std::abs(model.dt())))
    throw std::invalid_argument("forecast: dt does not match the kNN training step");
  KnnForecastResult res;
  Matrix out(n_steps + 1, model.dim());
  Vector x = eta0;
  out.row(0) = x.transpose();
  int valid = 1;
  for (int i = 0; i < n_steps; ++i) {
    x = model.step(x);
    if (!x.allFinite() || x.norm() > bound) {
      res.blew_up = true;
      break;
    }
    out.row(valid++) = x.transpose();
  }
  res.trajectory.dt = model.dt();
  res.trajectory.states.push_back(out.topRows(valid));
  return res;
}

/// Pairs plus index parameters; the kd-tree is rebuilt on load.
inline void save_knn_model(const KnnModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "knnmodel v1\n";
  char dtbuf[32];
  std::snprintf(dtbuf, sizeof(dtbuf), "%.17g", m.dt());
  out << m.dim() << ' ' << m.n_pairs() << ' ' << m.k() << ' ' << m.theiler() << ' ' << dtbuf
      << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < m.n_pairs(); ++i) {
    for (int j = 0; j < m.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.points()(i, j));
      out << (j ? " " : "") << buf;
    }
    for (int j = 0; j < m.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.successors()(i, j));
      out << ' ' << buf;
    }
    out << "\n";
  }
}

inline KnnModel load_knn_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic, version;
  in >> magic >> version;
  if (magic != "knnmodel" || version != "v1")
    throw std::runtime_error("load_knn_model: bad header");
  int dim = 0, k = 0, theiler = 0;
  std::int64_t n = 0;
  double dt = 0.0;
  in >> dim >> n >> k >> theiler >> dt;
  if (!in || dim < 1 || n < 1) throw std::runtime_error("load_knn_model: malformed size line");
  Matrix pts(n, dim), succ(n, dim);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) in >> pts(i, j);
    for (int j = 0; j < dim; ++j) in >> succ(i, j);
  }
  if (!in) throw std::runtime_error("load_knn_model: truncated pair block");
  return KnnModel(std::move(pts), std::move(succ), k, dt, theiler);
}

}  // namespace ssm
