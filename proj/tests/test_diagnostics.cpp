#include <catch2/catch_amalgamated.hpp>

#include "ssmchaos/diagnostics.hpp"
#include "ssmchaos/systems.hpp"

#include <cmath>

using namespace ssm;

TEST_CASE("NMTE matches a hand computation") {
  Matrix ref(3, 2), pred(3, 2);
  ref << 3.0, 4.0,   // norm 5 (the normalization)
         0.0, 1.0,
         1.0, 0.0;
  pred << 3.0, 4.0,  // error 0
          0.0, 2.0,  // error 1
          1.0, 2.0;  // error 2
  const auto res = nmte(ref, pred);
  CHECK(res.normalization == Catch::Approx(5.0));
  CHECK(res.curve[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(res.curve[1] == Catch::Approx(0.5 / 5.0).epsilon(1e-12));
  CHECK(res.curve[2] == Catch::Approx(1.0 / 5.0).epsilon(1e-12));

  SECTION("horizon finds the first threshold crossing") {
    CHECK(res.horizon(0.05, 0.1) == Catch::Approx(0.1));
    CHECK(res.horizon(0.15, 0.1) == Catch::Approx(0.2));
    // never crossed: the horizon extends past the data
    CHECK(res.horizon(0.5, 0.1) == Catch::Approx(0.3));
  }

  SECTION("validation") {
    CHECK_THROWS_AS(nmte(ref, pred.topRows(2)), std::invalid_argument);
    CHECK_THROWS_AS(nmte(Matrix::Zero(3, 2), Matrix::Zero(3, 2)), std::invalid_argument);
  }
}

TEST_CASE("NMTE of a perfect prediction is identically zero") {
  Matrix ref(10, 3);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 3; ++j) ref(i, j) = std::sin(i + j);
  const auto res = nmte(ref, ref);
  CHECK(res.curve.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("MLE of an exact exponential separation") {
  const double lambda = 0.9, dt = 0.01, eps0 = 1e-9;
  const int n = 3000;
  Matrix a = Matrix::Zero(n, 1), b(n, 1);
  for (int i = 0; i < n; ++i) b(i, 0) = eps0 * std::exp(lambda * i * dt);
  TrajectorySet ta, tb;
  ta.dt = tb.dt = dt;
  ta.states.push_back(a);
  tb.states.push_back(b);
  const auto est = mle_from_pair(ta, tb, std::make_pair(5.0, 25.0));
  CHECK(est.mle == Catch::Approx(lambda).epsilon(1e-10));
  CHECK(est.fit_r2 == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(est.chaotic);
  CHECK(est.lyapunov_time == Catch::Approx(1.0 / lambda).epsilon(1e-10));
}

TEST_CASE("MLE of the Lorenz attractor from a nearby pair") {
  Vector x0(3), x1(3);
  x0 << -8.0, 8.0, 27.0;
  x1 = x0;
  x1[2] += 1e-9;
  const auto a = integrate(lorenz3_spec(), x0, {0.0, 40.0}, 0.01);
  const auto b = integrate(lorenz3_spec(), x1, {0.0, 40.0}, 0.01);
  const auto est = mle_from_pair(a, b);
  // literature value for the classic parameters is about 0.90
  CHECK(est.mle == Catch::Approx(0.90).margin(0.15));
  CHECK(est.chaotic);
}

TEST_CASE("Contracting dynamics are flagged as not chaotic") {
  const double dt = 0.01;
  const int n = 2000;
  Matrix a(n, 1), b(n, 1);
  for (int i = 0; i < n; ++i) {
    a(i, 0) = std::exp(-0.5 * i * dt);
    b(i, 0) = (1.0 + 1e-6) * std::exp(-0.5 * i * dt);
  }
  TrajectorySet ta, tb;
  ta.dt = tb.dt = dt;
  ta.states.push_back(a);
  tb.states.push_back(b);
  const auto est = mle_from_pair(ta, tb, std::make_pair(2.0, 15.0));
  CHECK(est.mle < 0.0);
  CHECK_FALSE(est.chaotic);
  CHECK(est.lyapunov_time == 0.0);
}

TEST_CASE("Zero separation is rejected") {
  Matrix a = Matrix::Zero(100, 1);
  TrajectorySet ta, tb;
  ta.dt = tb.dt = 0.1;
  ta.states.push_back(a);
  tb.states.push_back(a);
  CHECK_THROWS(mle_from_pair(ta, tb));
}

TEST_CASE("Ensemble MLE averages over trials") {
  const double lambda = 0.45, dt = 0.05;
  // forecaster with exactly exponential state growth: separations inherit it
  const ForecastFn forecaster = [&](const Vector& x0, int n_steps) {
    Matrix out(n_steps + 1, x0.size());
    for (int i = 0; i <= n_steps; ++i)
      out.row(i) = (x0 * std::exp(lambda * i * dt)).transpose();
    return out;
  };
  Matrix base(5, 2);
  base << 1.0, 0.5, -0.7, 1.2, 0.4, -0.9, 1.5, 0.1, -0.3, -0.8;
  Pcg64 rng(77);
  const auto est = mle_ensemble(forecaster, base, 8, 1e-8, dt, 30.0, rng,
                                std::make_pair(2.0, 20.0));
  CHECK(est.per_trial.size() == 8);
  CHECK(est.failed_trials == 0);
  CHECK(est.mle == Catch::Approx(lambda).epsilon(1e-6));
  CHECK(est.chaotic);
}

TEST_CASE("Ensemble MLE counts failed trials") {
  int calls = 0;
  const ForecastFn flaky = [&](const Vector& x0, int n_steps) -> Matrix {
    if (++calls % 4 == 0) throw std::runtime_error("model blew up");
    Matrix out(n_steps + 1, x0.size());
    for (int i = 0; i <= n_steps; ++i)
      out.row(i) = (x0 * std::exp(0.3 * i * 0.05)).transpose();
    return out;
  };
  Matrix base(1, 1);
  base << 1.0;
  Pcg64 rng(5);
  const auto est = mle_ensemble(flaky, base, 6, 1e-8, 0.05, 30.0, rng,
                                std::make_pair(2.0, 20.0));
  CHECK(est.failed_trials > 0);
  CHECK(est.per_trial.size() + est.failed_trials == 6);
}

TEST_CASE("Density comparison of identical data is exact") {
  Pcg64 rng(9);
  Matrix pts(5000, 2);
  for (int i = 0; i < 5000; ++i) {
    pts(i, 0) = rng.normal();
    pts(i, 1) = 2.0 * rng.normal() + 1.0;
  }
  TrajectorySet data;
  data.dt = 1.0;
  data.states.push_back(pts);
  const auto cmp = density_compare(data, data);
  REQUIRE(cmp.per_coordinate.size() == 2);
  CHECK(cmp.max_l1() == 0.0);

  SECTION("densities integrate to one") {
    for (const auto& c : cmp.per_coordinate) {
      const double dx = c.grid[1] - c.grid[0];
      CHECK(c.density_ref.sum() * dx == Catch::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("Density comparison separates different distributions") {
  Pcg64 rng(31);
  Matrix a(20000, 1), b(20000, 1), c(20000, 1);
  for (int i = 0; i < 20000; ++i) {
    a(i, 0) = rng.normal();
    b(i, 0) = rng.normal();
    c(i, 0) = rng.normal() + 2.0;  // shifted by two standard deviations
  }
  TrajectorySet ta, tb, tc;
  ta.dt = tb.dt = tc.dt = 1.0;
  ta.states.push_back(a);
  tb.states.push_back(b);
  tc.states.push_back(c);

  const auto same = density_compare(ta, tb);
  const auto shifted = density_compare(ta, tc);
  CHECK(same.max_l1() < 0.05);
  // exact L1 distance between N(0,1) and N(2,1) is 2(Phi(1) - Phi(-1)) ~ 1.365
  CHECK(shifted.max_l1() > 1.2);
  CHECK(shifted.max_l1() < 1.45);
}

TEST_CASE("Density comparison validation") {
  TrajectorySet a, b;
  a.dt = b.dt = 1.0;
  a.states.push_back(Matrix::Random(100, 2));
  b.states.push_back(Matrix::Random(100, 3));
  CHECK_THROWS_AS(density_compare(a, b), std::invalid_argument);
  CHECK_THROWS_AS(density_compare(a, TrajectorySet{}), std::invalid_argument);
}

TEST_CASE("Benettin estimator recovers known expansion rates") {
  SECTION("linear saddle expands at exactly its unstable eigenvalue") {
    const auto step = [](Vector& x, double tau) {
      x[0] *= std::exp(0.3 * tau);
      x[1] *= std::exp(-1.0 * tau);
      return true;
    };
    Vector x0(2);
    x0 << 0.1, 0.1;
    const auto lam = benettin_mle(step, x0, 1e-7, 1.0, 50, 0.0);
    REQUIRE(lam.has_value());
    CHECK(*lam == Catch::Approx(0.3).margin(1e-6));
  }

  SECTION("Lorenz attractor estimate lands near the known exponent") {
    const auto spec = lorenz3_spec();
    const auto rhs = make_rhs(spec);
    const auto step = [&](Vector& x, double tau) {
      const int n = static_cast<int>(std::lround(tau / 0.01));
      const Matrix m = rk4_integrate(rhs, x, 0.0, n, 0.01);
      x = m.bottomRows(1).row(0).transpose();
      return x.allFinite();
    };
    Vector x0(3);
    x0 << -8.0, 8.0, 27.0;
    const auto lam = benettin_mle(step, x0, 1e-7, 1.0, 300, 20.0);
    REQUIRE(lam.has_value());
    // literature value for these parameters is about 0.906
    CHECK(*lam == Catch::Approx(0.906).margin(0.08));
  }

  SECTION("step failure yields no estimate") {
    const auto step = [](Vector&, double) { return false; };
    CHECK_FALSE(benettin_mle(step, Vector::Zero(2)).has_value());
  }
}
