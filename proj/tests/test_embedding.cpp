#include <catch2/catch_amalgamated.hpp>

#include "ssmchaos/embedding.hpp"
#include "ssmchaos/rng.hpp"
#include "ssmchaos/systems.hpp"

#include <cmath>

using namespace ssm;

namespace {

TrajectorySet scalar_series(const Vector& s, double dt) {
  TrajectorySet out;
  out.dt = dt;
  out.states.push_back(s);
  return out;
}

TrajectorySet lorenz_x_series(double t_end = 60.0, int stride = 1) {
  Vector x0(3);
  x0 << -8.0, 8.0, 27.0;
  auto traj = integrate(lorenz3_spec(), x0, {0.0, t_end}, 0.001).truncated(1.0);
  return traj.coordinate(0).subsampled(stride);
}

}  // namespace

TEST_CASE("Delay embedding shapes and identities") {
  Vector s(10);
  for (int i = 0; i < 10; ++i) s[i] = i;
  const auto series = scalar_series(s, 0.1);

  SECTION("m=1 is the identity") {
    const auto out = delay_embed(series, {0, 1, 1});
    CHECK(out.states.front() == series.states.front());
  }

  SECTION("stacked delays") {
    const auto out = delay_embed(series, {0, 3, 2});
    REQUIRE(out.states.front().rows() == 6);
    REQUIRE(out.states.front().cols() == 3);
    CHECK(out.states.front()(0, 0) == 0.0);
    CHECK(out.states.front()(0, 1) == 2.0);
    CHECK(out.states.front()(0, 2) == 4.0);
    CHECK(out.states.front()(5, 2) == 9.0);
  }

  SECTION("constant series embeds to constant vectors") {
    const auto out = delay_embed(scalar_series(Vector::Constant(20, 3.5), 0.1), {0, 4, 2});
    CHECK((out.states.front().array() - 3.5).abs().maxCoeff() == 0.0);
  }

  SECTION("zero maps to zero and the map is linear") {
    const auto z = delay_embed(scalar_series(Vector::Zero(20), 0.1), {0, 4, 2});
    CHECK(z.states.front().cwiseAbs().maxCoeff() == 0.0);
    Pcg64 rng(3);
    Vector a(30), b(30);
    for (int i = 0; i < 30; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const DelaySpec spec{0, 5, 3};
    const auto ea = delay_embed(scalar_series(a, 0.1), spec).states.front();
    const auto eb = delay_embed(scalar_series(b, 0.1), spec).states.front();
    const auto eab = delay_embed(scalar_series(2.0 * a + b, 0.1), spec).states.front();
    CHECK((eab - 2.0 * ea - eb).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("too-short series is rejected") {
    CHECK_THROWS_AS(delay_embed(scalar_series(Vector::Zero(5), 0.1), {0, 4, 2}),
                    std::invalid_argument);
  }
}

TEST_CASE("AMI lag selection") {
  SECTION("noisy cosine first minimum near a quarter period") {
    // a touch of noise makes the lagged pair genuinely stochastic, so the
    // histogram MI tracks the correlation and dips at the quarter period
    const int period = 100;
    Pcg64 rng(5);
    Vector s(8000);
    for (int i = 0; i < 8000; ++i)
      s[i] = std::cos(2.0 * M_PI * i / period) + 0.05 * rng.normal();
    const auto res = ami_lag(scalar_series(s, 0.01), 80, 64);
    CHECK(res.minimum_found);
    CHECK(std::abs(res.lag - period / 4) <= 2);
  }

  SECTION("shuffled surrogate has no mutual-information structure") {
    auto series = lorenz_x_series(30.0);
    Vector s = series.states.front().col(0);
    Pcg64 rng(11);
    for (Eigen::Index i = s.size() - 1; i > 0; --i)
      std::swap(s[i], s[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    const auto res = ami_lag(scalar_series(s, 0.001), 40, 64);
    // the MI curve of the shuffle is flat noise, so the detected minimum sits
    // at some small lag and its MI is near zero compared with the original
    CHECK(res.lag <= 7);
    const auto orig = ami_lag(series, 40, 64);
    CHECK(res.curve[1] < 0.1 * orig.curve[1]);
  }

  SECTION("Lorenz series has a finite first minimum") {
    const auto res = ami_lag(lorenz_x_series(30.0), 400, 64);
    CHECK(res.minimum_found);
    CHECK(res.lag > 1);
  }

  SECTION("constant series is degenerate") {
    CHECK_THROWS_AS(ami_lag(scalar_series(Vector::Constant(100, 1.0), 0.1), 10),
                    std::invalid_argument);
  }
}

TEST_CASE("FNN dimension estimation") {
  SECTION("Lorenz x-series needs three dimensions") {
    const auto series = lorenz_x_series(200.0, 10);
    const auto ami = ami_lag(series, 100, 64);
    REQUIRE(ami.minimum_found);
    FnnOptions opts;
    // slightly beyond the AMI lag so the folded sheets of a too-thin
    // embedding have time to separate
    opts.lag_steps = (5 * ami.lag) / 4;
    opts.theiler = opts.lag_steps;
    const auto report = fnn_dimension(series, {2, 3}, opts);
    REQUIRE(report.fnn_percentage.size() == 2);
    CHECK(report.fnn_percentage[0] > 10.0);
    CHECK(report.fnn_percentage[1] < 1.0);
    CHECK(report.chosen_dim == 3);
  }

  SECTION("FNN percentages fall monotonically on attractor data") {
    const auto series = lorenz_x_series(120.0, 10);
    FnnOptions opts;
    opts.lag_steps = (5 * ami_lag(series, 100, 64).lag) / 4;
    opts.theiler = opts.lag_steps;
    const auto report = fnn_dimension(series, {2, 3, 4, 5}, opts);
    for (std::size_t i = 1; i < report.fnn_percentage.size(); ++i)
      CHECK(report.fnn_percentage[i] <= report.fnn_percentage[i - 1] + 1.0);
  }

  SECTION("a circle unfolds already at dimension 2") {
    Vector s(4000);
    for (int i = 0; i < 4000; ++i) s[i] = std::cos(2.0 * M_PI * i / 400.0);
    FnnOptions opts;
    opts.lag_steps = 100;  // quarter period, the natural unfolding lag
    const auto report = fnn_dimension(scalar_series(s, 0.01), {2}, opts);
    CHECK(report.fnn_percentage[0] == 0.0);
  }

  SECTION("argument validation") {
    const auto series = lorenz_x_series(5.0);
    FnnOptions bad;
    bad.r_tol = 0.5;
    CHECK_THROWS_AS(fnn_dimension(series, {2, 3}, bad), std::invalid_argument);
    CHECK_THROWS_AS(fnn_dimension(series, {3, 2}), std::invalid_argument);
  }
}
