#include <catch2/catch_amalgamated.hpp>

#include "ssmchaos/poincare.hpp"

#include <cmath>

using namespace ssm;

TEST_CASE("Stroboscopic sampling") {
  TrajectorySet traj;
  traj.dt = M_PI / 1000.0;
  Matrix m(5001, 2);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double t = i * traj.dt;
    m(i, 0) = std::sin(2.0 * t);  // period pi
    m(i, 1) = std::cos(2.0 * t);
  }
  traj.states.push_back(m);

  SECTION("period equal to dt is the identity") {
    const auto out = poincare_sample(traj, traj.dt);
    CHECK(out.states.front().rows() == m.rows());
    CHECK((out.states.front() - m).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("sampling a periodic signal at its period gives a constant sequence") {
    const auto out = poincare_sample(traj, M_PI);
    const Matrix& s = out.states.front();
    REQUIRE(s.rows() == 6);
    for (Eigen::Index i = 1; i < s.rows(); ++i)
      CHECK((s.row(i) - s.row(0)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(out.dt == Catch::Approx(M_PI));
  }

  SECTION("every 1000th sample at period pi") {
    const auto out = poincare_sample(traj, M_PI);
    CHECK((out.states.front().row(1) - m.row(1000)).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("incommensurate period is rejected") {
    CHECK_THROWS_AS(poincare_sample(traj, M_PI * 1.0005), std::invalid_argument);
  }
}

TEST_CASE("Unforced period map has the origin as exact fixed point") {
  auto spec = duffing_chain_spec(0.0, 2.0);
  const auto fp = find_map_fixed_point(spec, M_PI, Vector::Zero(8), 1e-10);
  CHECK(fp.state.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fp.residual_norm == 0.0);
}

TEST_CASE("Forced Duffing chain Poincare map fixed point") {
  auto spec = duffing_chain_spec(2.25, 2.0);
  const auto fp = find_map_fixed_point(spec, M_PI, Vector::Zero(8), 1e-9);
  CHECK(fp.residual_norm <= 1e-9);
  CHECK(fp.state.norm() > 1e-3);  // forcing shifts the anchor off the origin
  CHECK(fp.state.norm() < 2.0);

  int outside_unit_circle = 0;
  for (const auto& mu : fp.stability)
    if (std::abs(mu) > 1.0) ++outside_unit_circle;
  CHECK(outside_unit_circle == 1);

  SECTION("closure oracle: re-integrating one period returns to the fixed point") {
    const auto rhs = make_rhs(spec);
    const int n_steps = static_cast<int>(std::llround(M_PI / 1e-3));
    const Vector mapped = rk4_advance(rhs, fp.state, 0.0, n_steps, M_PI / n_steps);
    CHECK((mapped - fp.state).norm() <= 10.0 * 1e-9);
  }
}

TEST_CASE("Fixed point solver rejects unforced specs without forcing data") {
  const auto spec = lorenz3_spec();
  CHECK_THROWS_AS(find_map_fixed_point(spec, M_PI, Vector::Zero(3), 1e-10),
                  std::invalid_argument);
}
