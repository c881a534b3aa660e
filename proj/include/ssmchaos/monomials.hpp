#pragma once

#include "ssmchaos/trajectory.hpp"

#include <stdexcept>
#include <vector>

namespace ssm {

/// Exponent table of all d-variate monomials from order l to order r, in
/// graded lexicographic order (ascending total degree; lexicographic by
/// leading variable within each degree, e.g. u1^2, u1 u2, u2^2).
class MonomialBasis {
 public:
  MonomialBasis() = default;

  MonomialBasis(int dim, int order_min, int order_max)
      : dim_(dim), order_min_(order_min), order_max_(order_max) {
    if (dim < 1 || order_min < 1 || order_min > order_max)
      throw std::invalid_argument("MonomialBasis: need 1 <= l <= r and dim >= 1");
    std::vector<int> expo(dim, 0);
    for (int k = order_min; k <= order_max; ++k) generate(0, k, expo);
  }

  int dim() const { return dim_; }
  int order_min() const { return order_min_; }
  int order_max() const { return order_max_; }
  int size() const { return static_cast<int>(exponents_.size()); }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  /// Number of d-variate monomials of exact order k.
  static long long count_at_order(int dim, int k) {
    // C(dim + k - 1, k)
    long long num = 1;
    for (int i = 1; i <= k; ++i) num = num * (dim + i - 1) / i;
    return num;
  }

  /// Evaluate the monomial vector at a point, in table order.
  Vector evaluate(const Vector& u) const {
    if (u.size() != dim_) throw std::invalid_argument("MonomialBasis: dimension mismatch");
    Vector out(size());
    for (int t = 0; t < size(); ++t) {
      double v = 1.0;
      for (int j = 0; j < dim_; ++j)
        for (int e = 0; e < exponents_[t][j]; ++e) v *= u[j];
      out[t] = v;
    }
    return out;
  }

  /// Design matrix: one row of monomial values per input row.
  Matrix evaluate_rows(const Matrix& pts) const {
    if (pts.cols() != dim_) throw std::invalid_argument("MonomialBasis: dimension mismatch");
    Matrix out(pts.rows(), size());
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      out.row(i) = evaluate(pts.row(i).transpose()).transpose();
    return out;
  }

  /// Jacobian of the monomial vector at a point: (size x dim).
  Matrix jacobian(const Vector& u) const {
    Matrix J = Matrix::Zero(size(), dim_);
    for (int t = 0; t < size(); ++t) {
      for (int j = 0; j < dim_; ++j) {
        const int ej = exponents_[t][j];
        if (ej == 0) continue;
        double v = static_cast<double>(ej);
        for (int jj = 0; jj < dim_; ++jj) {
          const int e = exponents_[t][jj] - (jj == j ? 1 : 0);
          for (int p = 0; p < e; ++p) v *= u[jj];
        }
        J(t, j) = v;
      }
    }
    return J;
  }

 private:
  void generate(int var, int remaining, std::vector<int>& expo) {
    if (var == dim_ - 1) {
      expo[var] = remaining;
      exponents_.push_back(expo);
      expo[var] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      expo[var] = e;
      generate(var + 1, remaining - e, expo);
    }
    expo[var] = 0;
  }

  int dim_ = 0;
  int order_min_ = 0;
  int order_max_ = 0;
  std::vector<std::vector<int>> exponents_;
};

inline MonomialBasis monomials(int dim, int l, int r) { return MonomialBasis(dim, l, r); }

}  // namespace ssm
