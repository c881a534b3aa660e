#pragma once

#include "ssmchaos/monomials.hpp"
#include "ssmchaos/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssm {

/// Polynomial graph over a d-dimensional tangent space of the embedding
/// space: M(eta) = origin + V1 eta + Vnl * monomials(eta), with V1'V1 = I and
/// V1'Vnl = 0.
struct SsmModel {
  int rho = 0;    // ambient dimension
  int d = 0;      // manifold dimension
  int order = 0;  // polynomial order K
  Matrix V1;      // rho x d, orthonormal columns
  Matrix Vnl;     // rho x D_nl, orthogonal to V1 (empty when order == 1)
  MonomialBasis basis;
  Vector origin;  // anchor offset in ambient space
  bool anchor_fitted = false;  // anchor regressed from data rather than supplied

  Vector project(const Vector& y) const {
    if (y.size() != rho) throw std::invalid_argument("SsmModel::project: dimension mismatch");
    return V1.transpose() * (y - origin);
  }

  Vector lift(const Vector& eta) const {
    if (eta.size() != d) throw std::invalid_argument("SsmModel::lift: dimension mismatch");
    Vector y = origin + V1 * eta;
    if (Vnl.cols() > 0) y += Vnl * basis.evaluate(eta);
    return y;
  }

  /// Project every row of a trajectory set into reduced coordinates.
  TrajectorySet project_all(const TrajectorySet& data) const {
    TrajectorySet out;
    out.dt = data.dt;
    out.labels = data.labels;
    for (const auto& m : data.states)
      out.states.push_back((m.rowwise() - origin.transpose()) * V1);
    return out;
  }

  /// Lift every row of a reduced trajectory set back to ambient space.
  TrajectorySet lift_all(const TrajectorySet& reduced) const {
    TrajectorySet out;
    out.dt = reduced.dt;
    out.labels = reduced.labels;
    for (const auto& m : reduced.states) {
      Matrix y = m * V1.transpose();
      if (Vnl.cols() > 0) y += basis.evaluate_rows(m) * Vnl.transpose();
      y.rowwise() += origin.transpose();
      out.states.push_back(std::move(y));
    }
    return out;
  }

  double constraint_residual_orthonormal() const {
    return (V1.transpose() * V1 - Matrix::Identity(d, d)).norm();
  }
  double constraint_residual_orthogonal() const {
    return Vnl.cols() > 0 ? (V1.transpose() * Vnl).norm() : 0.0;
  }
};

/// Normalized invariance error: mean distance between data points and their
/// project-then-lift reconstructions, scaled by the largest data norm.
inline double invariance_error(const SsmModel& model, const TrajectorySet& data) {
  if (data.total_samples() == 0) throw std::invalid_argument("invariance_error: empty data");
  double sum = 0.0;
  double max_norm = 0.0;
  std::size_t count = 0;
  for (const auto& m : data.states) {
    const Matrix shifted = m.rowwise() - model.origin.transpose();
    const Matrix eta = shifted * model.V1;
    Matrix recon = eta * model.V1.transpose();
    if (model.Vnl.cols() > 0) recon += model.basis.evaluate_rows(eta) * model.Vnl.transpose();
    sum += (shifted - recon).rowwise().norm().sum();
    max_norm = std::max(max_norm, shifted.rowwise().norm().maxCoeff());
    count += static_cast<std::size_t>(m.rows());
  }
  if (max_norm <= 0.0) throw std::invalid_argument("invariance_error: all-zero data");
  return sum / (static_cast<double>(count) * max_norm);
}

struct FitReport {
  double invariance_error = 0.0;
  int order = 0;
  int d = 0;
  std::size_t n_points = 0;
  int solver_iterations = 0;
  bool converged = true;
  bool ridge_applied = false;
  std::vector<double> objective_history;
};

struct FitOptions {
  int max_iter = 300;
  double rel_tol = 1e-9;
  double ridge = 1e-10;          // scaled by trace of the monomial Gramian
  std::int64_t max_points = 20000;  // subsample cap for the iterative solver
  bool fit_anchor = false;       // regress a constant term (unknown anchor)
};

namespace detail {

/// Ridge-regularized least squares: minimize ||Phi X - B||_F.
inline Matrix ridge_solve(const Matrix& gram, const Matrix& rhs, double ridge,
                          bool* flagged = nullptr) {
  Matrix G = gram;
  const double scale = ridge * G.trace() / G.rows();
  G.diagonal().array() += scale;
  Eigen::LDLT<Matrix> ldlt(G);
  if (ldlt.info() != Eigen::Success) {
    if (flagged) *flagged = true;
    G.diagonal().array() += 1e6 * scale;
    ldlt.compute(G);
  }
  return ldlt.solve(rhs);
}

/// Ridge least squares min ||Phi X - B||_F with the normal equations formed
/// on unit-RMS columns; high-order monomial columns differ by many orders of
/// magnitude and would otherwise overwhelm the Gramian's conditioning.
inline Matrix equilibrated_lsq(const Matrix& Phi, const Matrix& B, double ridge,
                               bool* flagged = nullptr) {
  Vector s = (Phi.colwise().squaredNorm() / static_cast<double>(Phi.rows())).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.size(); ++j)
    if (!(s[j] > 0.0)) s[j] = 1.0;
  const Matrix Ps = Phi * s.cwiseInverse().asDiagonal();
  const Matrix X = ridge_solve(Ps.transpose() * Ps, Ps.transpose() * B, ridge, flagged);
  return s.cwiseInverse().asDiagonal() * X;
}

/// Leading d principal directions of the rows of Y.
inline Matrix principal_directions(const Matrix& Y, int d) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Y.transpose() * Y);
  const Matrix& vecs = eig.eigenvectors();  // ascending eigenvalues
  Matrix V1(Y.cols(), d);
  for (int j = 0; j < d; ++j) V1.col(j) = vecs.col(vecs.cols() - 1 - j);
  return V1;
}

/// Retraction onto the Stiefel manifold via thin QR with positive diagonal.
inline Matrix qr_retract(const Matrix& A) {
  Eigen::HouseholderQR<Matrix> qr(A);
  Matrix Q = qr.householderQ() * Matrix::Identity(A.rows(), A.cols());
  const Matrix R = Q.transpose() * A;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

struct NonlinearFit {
  Matrix Vnl;
  Vector anchor;  // empty unless fit_anchor
  double objective;
  bool ridge_flagged = false;
};

/// Given V1, fit the nonlinear coefficients (and optionally a constant term
/// orthogonal to V1) by least squares on the residual Y - Y V1 V1'.
inline NonlinearFit fit_nonlinear(const Matrix& Y, const Matrix& V1, const MonomialBasis& basis,
                                  const FitOptions& opts) {
  NonlinearFit out;
  const Matrix eta = Y * V1;
  const Matrix resid = Y - eta * V1.transpose();
  Matrix Phi = basis.evaluate_rows(eta);
  if (opts.fit_anchor) {
    Matrix aug(Phi.rows(), Phi.cols() + 1);
    aug.col(0).setOnes();
    aug.rightCols(Phi.cols()) = Phi;
    Phi = std::move(aug);
  }
  const Matrix X = equilibrated_lsq(Phi, resid, opts.ridge, &out.ridge_flagged);
  Matrix coeffs = X.transpose();  // rho x (D [+1])
  if (opts.fit_anchor) {
    out.anchor = coeffs.col(0);
    out.Vnl = coeffs.rightCols(coeffs.cols() - 1);
  } else {
    out.Vnl = std::move(coeffs);
  }
  // enforce V1'Vnl = 0 exactly (holds analytically; guard against round-off)
  out.Vnl -= V1 * (V1.transpose() * out.Vnl);
  Matrix r = resid - Phi.rightCols(out.Vnl.cols()) * out.Vnl.transpose();
  if (opts.fit_anchor) r.rowwise() -= out.anchor.transpose();
  out.objective = r.squaredNorm();
  return out;
}

}  // namespace detail

/// SVD tangent space plus explicit polynomial regression; cost linear in rho.
inline std::pair<SsmModel, FitReport> fit_ssm_fast(const TrajectorySet& data, int d, int order,
                                                   FitOptions opts = {}) {
  const Matrix Y = data.stacked();
  if (Y.cols() <= d) throw std::invalid_argument("fit_ssm_fast: need ambient dim > d");
  SsmModel model;
  model.rho = static_cast<int>(Y.cols());
  model.d = d;
  model.order = order;
  model.origin = Vector::Zero(model.rho);
  model.V1 = detail::principal_directions(Y, d);
  FitReport report;
  report.order = order;
  report.d = d;
  report.n_points = static_cast<std::size_t>(Y.rows());
  report.solver_iterations = 0;
  if (order >= 2) {
    model.basis = MonomialBasis(d, 2, order);
    auto nl = detail::fit_nonlinear(Y, model.V1, model.basis, opts);
    model.Vnl = std::move(nl.Vnl);
    report.ridge_applied = nl.ridge_flagged;
    if (opts.fit_anchor) {
      model.origin = nl.anchor;
      model.anchor_fitted = true;
    }
    report.objective_history.push_back(nl.objective);
  } else {
    model.Vnl = Matrix(model.rho, 0);
  }
  report.invariance_error = invariance_error(model, data);
  return {std::move(model), std::move(report)};
}

/// Constrained manifold fit: alternates least squares for the nonlinear
/// coefficients with projected-gradient (Stiefel) updates of the tangent
/// basis, with backtracking so the objective never increases.
inline std::pair<SsmModel, FitReport> fit_ssm(const TrajectorySet& data, int d, int order,
                                              FitOptions opts = {}) {
  Matrix Yfull = data.stacked();
  if (Yfull.cols() <= d) throw std::invalid_argument("fit_ssm: need ambient dim > d");
  // subsample for the iterative solver; the report error is on all data
  Matrix Y;
  if (Yfull.rows() > opts.max_points) {
    const Eigen::Index stride = (Yfull.rows() + opts.max_points - 1) / opts.max_points;
    const Eigen::Index n = Yfull.rows() / stride;
    Y.resize(n, Yfull.cols());
    for (Eigen::Index i = 0; i < n; ++i) Y.row(i) = Yfull.row(i * stride);
  } else {
    Y = Yfull;
  }

  SsmModel model;
  model.rho = static_cast<int>(Y.cols());
  model.d = d;
  model.order = order;
  model.origin = Vector::Zero(model.rho);
  model.V1 = detail::principal_directions(Y, d);

  FitReport report;
  report.order = order;
  report.d = d;
  report.n_points = static_cast<std::size_t>(Yfull.rows());

  if (order < 2) {
    model.Vnl = Matrix(model.rho, 0);
    report.invariance_error = invariance_error(model, TrajectorySet{{Yfull}, data.dt});
    return {std::move(model), std::move(report)};
  }

  model.basis = MonomialBasis(d, 2, order);
  auto nl = detail::fit_nonlinear(Y, model.V1, model.basis, opts);
  model.Vnl = nl.Vnl;
  if (opts.fit_anchor) {
    model.origin = nl.anchor;
    model.anchor_fitted = true;
  }
  double objective = nl.objective;
  report.objective_history.push_back(objective);
  report.ridge_applied = nl.ridge_flagged;

  double step = 1.0 / std::max(1.0, Y.squaredNorm() / Y.rows());
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    // Euclidean gradient of the objective in V1 (residual rows r_i):
    //   dJ/dV1 = -2 [ R' H + Y' G ],  G_i = Dphi(eta_i)' Vnl' r_i
    const Matrix eta = Y * model.V1;
    const Matrix Phi = model.basis.evaluate_rows(eta);
    Matrix R = Y - eta * model.V1.transpose() - Phi * model.Vnl.transpose();
    if (opts.fit_anchor) R.rowwise() -= model.origin.transpose();
    Matrix G(Y.rows(), d);
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      const Matrix Dphi = model.basis.jacobian(eta.row(i).transpose());
      G.row(i) = (Dphi.transpose() * (model.Vnl.transpose() * R.row(i).transpose())).transpose();
    }
    Matrix grad = -2.0 * (R.transpose() * eta + Y.transpose() * G);
    // Riemannian gradient on the Stiefel manifold
    const Matrix vtg = model.V1.transpose() * grad;
    grad -= model.V1 * (0.5 * (vtg + vtg.transpose()));
    const double gnorm = grad.norm();
    if (gnorm < 1e-14) {
      converged = true;
      break;
    }

    // backtracking line search; each candidate refits the nonlinear part
    bool accepted = false;
    detail::NonlinearFit cand_nl;
    Matrix cand_V1;
    for (int bt = 0; bt < 30; ++bt) {
      cand_V1 = detail::qr_retract(model.V1 - step * grad);
      cand_nl = detail::fit_nonlinear(Y, cand_V1, model.basis, opts);
      if (cand_nl.objective < objective) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {  // numerically stationary: no descent at machine precision
      converged = true;
      break;
    }
    model.V1 = cand_V1;
    model.Vnl = std::move(cand_nl.Vnl);
    if (opts.fit_anchor) {
      model.origin = cand_nl.anchor;
      model.anchor_fitted = true;
    }
    const double prev = objective;
    objective = cand_nl.objective;
    report.objective_history.push_back(objective);
    report.ridge_applied = report.ridge_applied || cand_nl.ridge_flagged;
    step *= 2.0;  // allow the step to grow back
    if (prev - objective < opts.rel_tol * std::max(prev, 1e-300)) {
      converged = true;
      break;
    }
  }
  report.solver_iterations = iter;
  report.converged = converged;
  report.invariance_error = invariance_error(model, TrajectorySet{{Yfull}, data.dt});
  return {std::move(model), std::move(report)};
}

/// Versioned text serialization; full precision, bit-stable round trip.
inline void save_ssm_model(const SsmModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "ssmmodel v1\n";
  out << m.rho << ' ' << m.d << ' ' << m.order << " grlex "
      << (m.anchor_fitted ? "fitted" : "anchored") << "\n";
  auto emit_row = [&out](const auto& row) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  };
  emit_row(m.origin);
  for (Eigen::Index i = 0; i < m.V1.rows(); ++i) emit_row(m.V1.row(i));
  for (Eigen::Index i = 0; i < m.Vnl.rows(); ++i) emit_row(m.Vnl.row(i));
}

inline SsmModel load_ssm_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic, version;
  in >> magic >> version;
  if (magic != "ssmmodel" || version != "v1")
    throw std::runtime_error("load_ssm_model: bad header in " + path.string());
  SsmModel m;
  std::string ordering, mode;
  in >> m.rho >> m.d >> m.order >> ordering >> mode;
  if (!in || ordering != "grlex" || (mode != "anchored" && mode != "fitted"))
    throw std::runtime_error("load_ssm_model: malformed mode line");
  m.anchor_fitted = (mode == "fitted");
  if (m.rho < 1 || m.d < 1 || m.order < 1)
    throw std::runtime_error("load_ssm_model: invalid dimensions");
  m.basis = m.order >= 2 ? MonomialBasis(m.d, 2, m.order) : MonomialBasis();
  const int dnl = m.order >= 2 ? m.basis.size() : 0;
  m.origin.resize(m.rho);
  for (int j = 0; j < m.rho; ++j) in >> m.origin[j];
  m.V1.resize(m.rho, m.d);
  for (int i = 0; i < m.rho; ++i)
    for (int j = 0; j < m.d; ++j) in >> m.V1(i, j);
  m.Vnl.resize(m.rho, dnl);
  for (int i = 0; i < m.rho; ++i)
    for (int j = 0; j < dnl; ++j) in >> m.Vnl(i, j);
  if (!in) throw std::runtime_error("load_ssm_model: truncated coefficient block");
  return m;
}

}  // namespace ssm
