#include <catch2/catch_amalgamated.hpp>

#include "ssmchaos/monomials.hpp"
#include "ssmchaos/rng.hpp"

using namespace ssm;

namespace {

// stars-and-bars enumeration, independent of the binomial shortcut
long long brute_force_count(int dim, int order) {
  if (dim == 1) return 1;
  long long total = 0;
  for (int lead = order; lead >= 0; --lead) total += brute_force_count(dim - 1, order - lead);
  return total;
}

}  // namespace

TEST_CASE("Monomial tables match the worked examples") {
  SECTION("dim=2, orders 2..3") {
    const auto basis = monomials(2, 2, 3);
    const std::vector<std::vector<int>> expected = {
        {2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}};
    REQUIRE(basis.exponents() == expected);
  }

  SECTION("dim=1 linear") {
    const auto basis = monomials(1, 1, 1);
    REQUIRE(basis.size() == 1);
    REQUIRE(basis.exponents().front() == std::vector<int>{1});
  }

  SECTION("dim=3, orders 2..6 counts") {
    const auto basis = monomials(3, 2, 6);
    REQUIRE(basis.size() == 80);
    std::vector<int> per_order(7, 0);
    for (const auto& e : basis.exponents()) {
      int total = 0;
      for (int v : e) total += v;
      ++per_order[total];
    }
    CHECK(per_order[2] == 6);
    CHECK(per_order[3] == 10);
    CHECK(per_order[4] == 15);
    CHECK(per_order[5] == 21);
    CHECK(per_order[6] == 28);
  }
}

TEST_CASE("Monomial counts agree with stars-and-bars for d <= 6, K <= 8") {
  for (int d = 1; d <= 6; ++d)
    for (int k = 1; k <= 8; ++k) {
      CHECK(MonomialBasis::count_at_order(d, k) == brute_force_count(d, k));
      CHECK(monomials(d, k, k).size() == brute_force_count(d, k));
    }
}

TEST_CASE("Monomial tables have no duplicates and respect the order range") {
  const auto basis = monomials(4, 2, 5);
  std::set<std::vector<int>> seen;
  for (const auto& e : basis.exponents()) {
    int total = 0;
    for (int v : e) total += v;
    CHECK(total >= 2);
    CHECK(total <= 5);
    CHECK(seen.insert(e).second);
  }
}

TEST_CASE("Evaluation matches a naive power product") {
  Pcg64 rng(7);
  const auto basis = monomials(3, 1, 4);
  Vector u(3);
  for (int i = 0; i < 3; ++i) u[i] = rng.uniform(-2.0, 2.0);
  const Vector vals = basis.evaluate(u);
  for (int t = 0; t < basis.size(); ++t) {
    double expected = 1.0;
    for (int j = 0; j < 3; ++j) expected *= std::pow(u[j], basis.exponents()[t][j]);
    CHECK(vals[t] == Catch::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("Monomial Jacobian matches finite differences") {
  const auto basis = monomials(3, 2, 4);
  Vector u(3);
  u << 0.4, -0.7, 1.1;
  const Matrix J = basis.jacobian(u);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Vector up = u, um = u;
    up[j] += h;
    um[j] -= h;
    const Vector fd = (basis.evaluate(up) - basis.evaluate(um)) / (2.0 * h);
    for (int t = 0; t < basis.size(); ++t)
      CHECK(J(t, j) == Catch::Approx(fd[t]).margin(1e-6));
  }
}

TEST_CASE("Invalid basis arguments are rejected") {
  CHECK_THROWS_AS(monomials(0, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(monomials(2, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(monomials(2, 3, 2), std::invalid_argument);
}
