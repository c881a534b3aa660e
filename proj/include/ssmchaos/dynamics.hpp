#pragma once

#include "ssmchaos/kdtree.hpp"
#include "ssmchaos/manifold.hpp"
#include "ssmchaos/monomials.hpp"
#include "ssmchaos/rk4.hpp"
#include "ssmchaos/trajectory.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ssm {

/// 4th-order finite-difference time derivatives, central in the interior and
/// one-sided at the boundaries. Exact on polynomials up to degree 4.
inline TrajectorySet estimate_derivatives(const TrajectorySet& traj) {
  TrajectorySet out;
  out.dt = traj.dt;
  out.labels = traj.labels;
  const double h = traj.dt;
  for (const auto& m : traj.states) {
    const Eigen::Index n = m.rows();
    if (n < 5) throw std::invalid_argument("estimate_derivatives: need >= 5 samples");
    Matrix d(n, m.cols());
    d.row(0) = (-25.0 * m.row(0) + 48.0 * m.row(1) - 36.0 * m.row(2) + 16.0 * m.row(3) -
                3.0 * m.row(4)) /
               (12.0 * h);
    d.row(1) = (-3.0 * m.row(0) - 10.0 * m.row(1) + 18.0 * m.row(2) - 6.0 * m.row(3) +
                m.row(4)) /
               (12.0 * h);
    for (Eigen::Index i = 2; i < n - 2; ++i)
      d.row(i) = (m.row(i - 2) - 8.0 * m.row(i - 1) + 8.0 * m.row(i + 1) - m.row(i + 2)) /
                 (12.0 * h);
    d.row(n - 2) = (3.0 * m.row(n - 1) + 10.0 * m.row(n - 2) - 18.0 * m.row(n - 3) +
                    6.0 * m.row(n - 4) - m.row(n - 5)) /
                   (12.0 * h);
    d.row(n - 1) = (25.0 * m.row(n - 1) - 48.0 * m.row(n - 2) + 36.0 * m.row(n - 3) -
                    16.0 * m.row(n - 4) + 3.0 * m.row(n - 5)) /
                   (12.0 * h);
    out.states.push_back(std::move(d));
  }
  return out;
}

/// Modal form of the linear part: block-diagonal Lambda (2x2 real blocks for
/// complex pairs) with transformed nonlinear coefficients.
struct ModalForm {
  Matrix W;        // eta = W xi
  Matrix Lambda;   // W^{-1} R1 W, real block-diagonal
  Matrix N;        // nonlinear coefficients in modal coordinates
  std::vector<std::complex<double>> eigenvalues;
};

/// Polynomial model of the reduced dynamics, continuous (vector field) or
/// discrete (map): rhs(eta) = R * monomials_{1:K}(eta).
struct PolyFlowModel {
  enum class Kind { Continuous, Discrete };
  int d = 0;
  int order = 0;
  Matrix R;  // d x (d1 + ... + dK), graded-lex monomials of order 1..K
  MonomialBasis basis;
  Kind kind = Kind::Continuous;
  std::optional<ModalForm> modal;
  bool ridge_applied = false;

  Matrix linear_part() const { return R.leftCols(d); }

  Vector eval(const Vector& eta) const { return R * basis.evaluate(eta); }

  /// Modal-coordinate right-hand side (requires modal form).
  Vector eval_modal(const Vector& xi) const {
    const auto& mf = modal.value();
    Vector out = mf.Lambda * xi;
    if (mf.N.cols() > 0) {
      const MonomialBasis nb(d, 2, order);
      out += mf.N * nb.evaluate(xi);
    }
    return out;
  }
};

namespace detail {

inline Matrix poly_regress(const Matrix& Phi, const Matrix& target, double ridge,
                           bool* flagged) {
  return equilibrated_lsq(Phi, target, ridge, flagged).transpose();
}

}  // namespace detail

struct PolyFitOptions {
  double ridge = 1e-10;
  std::int64_t max_points = 200000;
};

/// Least-squares polynomial vector field for the reduced dynamics,
/// regressing finite-difference derivatives on monomials of order 1..K.
inline PolyFlowModel fit_poly_flow(const TrajectorySet& etas, int order,
                                   const PolyFitOptions& opts = {}) {
  const TrajectorySet derivs = estimate_derivatives(etas);
  PolyFlowModel model;
  model.d = etas.state_dim();
  model.order = order;
  model.kind = PolyFlowModel::Kind::Continuous;
  model.basis = MonomialBasis(model.d, 1, order);
  Matrix H = etas.stacked();
  Matrix Hd = derivs.stacked();
  if (H.rows() > opts.max_points) {
    const Eigen::Index stride = (H.rows() + opts.max_points - 1) / opts.max_points;
    const Eigen::Index n = H.rows() / stride;
    Matrix Hs(n, H.cols()), Hds(n, H.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      Hs.row(i) = H.row(i * stride);
      Hds.row(i) = Hd.row(i * stride);
    }
    H = std::move(Hs);
    Hd = std::move(Hds);
  }
  const Matrix Phi = model.basis.evaluate_rows(H);
  model.R = detail::poly_regress(Phi, Hd, opts.ridge, &model.ridge_applied);
  return model;
}

struct StabilizedFitOptions {
  int order = 7;
  std::int64_t max_points = 120000;
  int density_neighbors = 20;   // the k-th neighbor distance sets the local scale
  double weight_exponent = 1.0; // weight = (k-NN distance)^exponent
  double weight_cap = 30.0;     // after normalizing weights to unit mean
  double ridge = 1e-10;
};

/// Higher-order polynomial vector field with the linear part pinned to `R1`
/// and samples reweighted by local k-nearest-neighbor distance. Plain least
/// squares concentrates accuracy where the trajectory is densest and can
/// place spurious attracting sets inside sparsely visited holes of a chaotic
/// attractor; inverse-density weights spread the accuracy evenly over the
/// sampled region and suppress those artifacts.
inline PolyFlowModel fit_poly_flow_stabilized(const TrajectorySet& etas, const Matrix& R1,
                                              const StabilizedFitOptions& opts = {}) {
  const TrajectorySet derivs = estimate_derivatives(etas);
  PolyFlowModel model;
  model.d = etas.state_dim();
  model.order = opts.order;
  model.kind = PolyFlowModel::Kind::Continuous;
  model.basis = MonomialBasis(model.d, 1, opts.order);
  if (R1.rows() != model.d || R1.cols() != model.d)
    throw std::invalid_argument("fit_poly_flow_stabilized: linear part must be d x d");

  Matrix H = etas.stacked();
  Matrix Hd = derivs.stacked();
  if (H.rows() > opts.max_points) {
    const Eigen::Index stride = (H.rows() + opts.max_points - 1) / opts.max_points;
    const Eigen::Index n = H.rows() / stride;
    Matrix Hs(n, H.cols()), Hds(n, H.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      Hs.row(i) = H.row(i * stride);
      Hds.row(i) = Hd.row(i * stride);
    }
    H = std::move(Hs);
    Hd = std::move(Hds);
  }

  Vector w(H.rows());
  {
    const KdTree tree(H);
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
      const auto nb = tree.nearest(H.row(i).transpose(), opts.density_neighbors + 1);
      double d2max = 0.0;
      for (const auto& x : nb) d2max = std::max(d2max, x.dist2);
      w[i] = std::pow(std::sqrt(d2max), opts.weight_exponent);
    }
  }
  w *= static_cast<double>(w.size()) / w.sum();
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::min(w[i], opts.weight_cap);

  const Matrix Phi = model.basis.evaluate_rows(H);
  const Eigen::Index nl = Phi.cols() - model.d;
  const Vector sqw = w.cwiseSqrt();
  const Matrix Phi_nl = sqw.asDiagonal() * Phi.rightCols(nl);
  const Matrix resid = sqw.asDiagonal() * (Hd - Phi.leftCols(model.d) * R1.transpose());
  const Matrix X =
      detail::equilibrated_lsq(Phi_nl, resid, opts.ridge, &model.ridge_applied).transpose();
  model.R.resize(model.d, Phi.cols());
  model.R.leftCols(model.d) = R1;
  model.R.rightCols(nl) = X;
  return model;
}

/// Discrete analog: regresses eta_{n+1} = R * monomials(eta_n) from
/// consecutive map iterates.
inline PolyFlowModel fit_poly_map(const TrajectorySet& etas, int order,
                                  const PolyFitOptions& opts = {}) {
  PolyFlowModel model;
  model.d = etas.state_dim();
  model.order = order;
  model.kind = PolyFlowModel::Kind::Discrete;
  model.basis = MonomialBasis(model.d, 1, order);
  std::size_t n_pairs = 0;
  for (const auto& m : etas.states) {
    if (m.rows() < 2) throw std::invalid_argument("fit_poly_map: need >= 2 iterates");
    n_pairs += static_cast<std::size_t>(m.rows() - 1);
  }
  Matrix X(n_pairs, model.d), Y(n_pairs, model.d);
  Eigen::Index row = 0;
  for (const auto& m : etas.states) {
    X.middleRows(row, m.rows() - 1) = m.topRows(m.rows() - 1);
    Y.middleRows(row, m.rows() - 1) = m.bottomRows(m.rows() - 1);
    row += m.rows() - 1;
  }
  const Matrix Phi = model.basis.evaluate_rows(X);
  model.R = detail::poly_regress(Phi, Y, opts.ridge, &model.ridge_applied);
  return model;
}

namespace detail {

/// Coefficient matrix T with monomials(W xi) = T * monomials(xi), for the
/// given basis (substitution of a linear map preserves the grading).
inline Matrix linear_substitution_matrix(const MonomialBasis& basis, const Matrix& W) {
  const int d = basis.dim();
  using Key = std::vector<int>;
  // index lookup for target monomials
  std::map<Key, int> index;
  for (int t = 0; t < basis.size(); ++t) index[basis.exponents()[t]] = t;
  Matrix T = Matrix::Zero(basis.size(), basis.size());
  for (int src = 0; src < basis.size(); ++src) {
    // expand prod_i (W.row(i) * xi)^{alpha_i} by repeated convolution
    std::map<Key, double> poly;
    poly[Key(d, 0)] = 1.0;
    const auto& alpha = basis.exponents()[src];
    for (int i = 0; i < d; ++i) {
      for (int rep = 0; rep < alpha[i]; ++rep) {
        std::map<Key, double> next;
        for (const auto& [key, coef] : poly) {
          for (int j = 0; j < d; ++j) {
            if (W(i, j) == 0.0) continue;
            Key k2 = key;
            ++k2[j];
            next[k2] += coef * W(i, j);
          }
        }
        poly = std::move(next);
      }
    }
    for (const auto& [key, coef] : poly) T(src, index.at(key)) = coef;
  }
  return T;
}

}  // namespace detail

/// Diagonalize the linear part by eta = W xi; complex pairs become 2x2 real
/// blocks [[a, b], [-b, a]]. Nonlinear coefficients are transformed so that
/// trajectories of the two forms agree under xi = W^{-1} eta.
inline PolyFlowModel modal_transform(const PolyFlowModel& model) {
  const Matrix R1 = model.linear_part();
  Eigen::EigenSolver<Matrix> es(R1);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("modal_transform: eigendecomposition failed");
  const auto& vals = es.eigenvalues();
  const auto& vecs = es.eigenvectors();

  ModalForm mf;
  mf.W.resize(model.d, model.d);
  mf.Lambda = Matrix::Zero(model.d, model.d);
  for (int j = 0; j < model.d;) {
    const auto lam = vals[j];
    mf.eigenvalues.push_back(lam);
    if (std::abs(lam.imag()) < 1e-12 * (1.0 + std::abs(lam.real()))) {
      Vector v = vecs.col(j).real();
      mf.W.col(j) = v / v.norm();
      mf.Lambda(j, j) = lam.real();
      ++j;
    } else {
      if (j + 1 >= model.d)
        throw std::runtime_error("modal_transform: unpaired complex eigenvalue");
      mf.eigenvalues.push_back(vals[j + 1]);
      Vector re = vecs.col(j).real();
      Vector im = vecs.col(j).imag();
      const double scale = std::sqrt(re.squaredNorm() + im.squaredNorm());
      mf.W.col(j) = re / scale;
      mf.W.col(j + 1) = im / scale;
      mf.Lambda(j, j) = lam.real();
      mf.Lambda(j, j + 1) = lam.imag();
      mf.Lambda(j + 1, j) = -lam.imag();
      mf.Lambda(j + 1, j + 1) = lam.real();
      j += 2;
    }
  }
  Eigen::FullPivLU<Matrix> lu(mf.W);
  if (!lu.isInvertible() || lu.rcond() < 1e-8)
    throw std::runtime_error("modal_transform: ill-conditioned eigenvector matrix");
  const Matrix Winv = lu.inverse();

  if (model.order >= 2) {
    const MonomialBasis nlbasis(model.d, 2, model.order);
    const int d1 = model.d;
    const Matrix Rnl = model.R.rightCols(model.R.cols() - d1);
    const Matrix T = detail::linear_substitution_matrix(nlbasis, mf.W);
    mf.N = Winv * Rnl * T;
  } else {
    mf.N = Matrix(model.d, 0);
  }

  PolyFlowModel out = model;
  out.modal = std::move(mf);
  return out;
}

struct ForecastResult {
  TrajectorySet trajectory;  // up to n_steps + 1 states (fewer on blow-up)
  bool blew_up = false;
  double blow_up_time = 0.0;
};

/// RK4 forecast of a continuous polynomial model (or iteration of a discrete
/// one). States beyond `bound` in norm truncate the forecast.
inline ForecastResult forecast(const PolyFlowModel& model, const Vector& eta0, int n_steps,
                               double dt, double bound = 1e6) {
  ForecastResult res;
  Matrix out(n_steps + 1, model.d);
  Vector x = eta0;
  out.row(0) = x.transpose();
  int valid = 1;
  const auto rhs = [&model](double, const Vector& e) { return model.eval(e); };
  for (int i = 0; i < n_steps; ++i) {
    if (model.kind == PolyFlowModel::Kind::Continuous) {
      x = rk4_step(rhs, i * dt, x, dt);
    } else {
      x = model.eval(x);
    }
    if (!x.allFinite() || x.norm() > bound) {
      res.blew_up = true;
      res.blow_up_time = (i + 1) * dt;
      break;
    }
    out.row(valid++) = x.transpose();
  }
  res.trajectory.dt = dt;
  res.trajectory.states.push_back(out.topRows(valid));
  return res;
}

/// Continuous polynomial flow with a calibrated leading-order harmonic term
/// acting in the first two reduced coordinates.
struct ForcedPolyFlow {
  PolyFlowModel base;  // continuous
  double amplitude = 0.0;  // A >= 0
  double frequency = 0.0;  // rad/s
  double phase = 0.0;      // in (-pi, pi]

  Vector forcing_direction() const {
    Vector dir = Vector::Zero(base.d);
    dir[0] = std::sin(phase);
    if (base.d > 1) dir[1] = std::cos(phase);
    return dir;
  }

  Vector eval(double t, const Vector& eta) const {
    return base.eval(eta) + amplitude * std::cos(frequency * t) * forcing_direction();
  }
};

inline ForecastResult forecast(const ForcedPolyFlow& model, const Vector& eta0, int n_steps,
                               double dt, double bound = 1e6, double t0 = 0.0) {
  if (model.base.kind != PolyFlowModel::Kind::Continuous)
    throw std::invalid_argument("forecast: forced model must be continuous");
  ForecastResult res;
  Matrix out(n_steps + 1, model.base.d);
  Vector x = eta0;
  out.row(0) = x.transpose();
  int valid = 1;
  const auto rhs = [&model](double t, const Vector& e) { return model.eval(t, e); };
  for (int i = 0; i < n_steps; ++i) {
    x = rk4_step(rhs, t0 + i * dt, x, dt);
    if (!x.allFinite() || x.norm() > bound) {
      res.blew_up = true;
      res.blow_up_time = t0 + (i + 1) * dt;
      break;
    }
    out.row(valid++) = x.transpose();
  }
  res.trajectory.dt = dt;
  res.trajectory.states.push_back(out.topRows(valid));
  return res;
}

/// Fit (A, phi) of the harmonic term A cos(Omega t) (sin phi, cos phi, 0...)
/// to one forced trajectory in reduced coordinates: linear least squares in
/// (A sin phi, A cos phi) against the derivative residual of the base model.
inline ForcedPolyFlow calibrate_forcing(const PolyFlowModel& base,
                                        const TrajectorySet& forced_reduced, double omega,
                                        double t0 = 0.0) {
  if (base.kind != PolyFlowModel::Kind::Continuous)
    throw std::invalid_argument("calibrate_forcing: base must be continuous");
  if (forced_reduced.state_dim() != base.d)
    throw std::invalid_argument("calibrate_forcing: dimension mismatch");
  const TrajectorySet derivs = estimate_derivatives(forced_reduced);
  double cp = 0.0, cq = 0.0, cc = 0.0;
  for (std::size_t tr = 0; tr < forced_reduced.states.size(); ++tr) {
    const Matrix& H = forced_reduced.states[tr];
    const Matrix& Hd = derivs.states[tr];
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
      const double c = std::cos(omega * (t0 + i * forced_reduced.dt));
      const Vector resid = Hd.row(i).transpose() - base.eval(H.row(i).transpose());
      cp += c * resid[0];
      if (base.d > 1) cq += c * resid[1];
      cc += c * c;
    }
  }
  if (cc <= 0.0) throw std::runtime_error("calibrate_forcing: degenerate forcing signal");
  const double p = cp / cc;  // A sin(phi)
  const double q = cq / cc;  // A cos(phi)
  ForcedPolyFlow out;
  out.base = base;
  out.amplitude = std::hypot(p, q);
  out.frequency = omega;
  out.phase = out.amplitude > 0.0 ? std::atan2(p, q) : 0.0;
  return out;
}

/// Versioned text serialization for polynomial models.
inline void save_poly_model(const PolyFlowModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "polymodel v1\n";
  out << m.d << ' ' << m.order << ' '
      << (m.kind == PolyFlowModel::Kind::Continuous ? "continuous" : "discrete") << " grlex\n";
  for (Eigen::Index i = 0; i < m.R.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.R.cols(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", m.R(i, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
}

inline PolyFlowModel load_poly_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic, version, kind, ordering;
  PolyFlowModel m;
  in >> magic >> version;
  if (magic != "polymodel" || version != "v1")
    throw std::runtime_error("load_poly_model: bad header");
  in >> m.d >> m.order >> kind >> ordering;
  if (!in || ordering != "grlex" || (kind != "continuous" && kind != "discrete"))
    throw std::runtime_error("load_poly_model: malformed kind line");
  m.kind = kind == "continuous" ? PolyFlowModel::Kind::Continuous : PolyFlowModel::Kind::Discrete;
  m.basis = MonomialBasis(m.d, 1, m.order);
  m.R.resize(m.d, m.basis.size());
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.basis.size(); ++j) in >> m.R(i, j);
  if (!in) throw std::runtime_error("load_poly_model: truncated coefficients");
  return m;
}

}  // namespace ssm
