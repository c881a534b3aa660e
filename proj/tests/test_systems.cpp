#include <catch2/catch_amalgamated.hpp>

#include "ssmchaos/systems.hpp"

#include <algorithm>
#include <complex>

using namespace ssm;

namespace {

std::vector<std::complex<double>> sorted_eigenvalues(const Matrix& J) {
  Eigen::EigenSolver<Matrix> es(J);
  std::vector<std::complex<double>> vals;
  for (Eigen::Index i = 0; i < J.rows(); ++i) vals.push_back(es.eigenvalues()[i]);
  std::sort(vals.begin(), vals.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return vals;
}

}  // namespace

TEST_CASE("Lorenz integration basics") {
  const auto spec = lorenz3_spec();
  Vector x0(3);
  x0 << -8.0, 8.0, 27.0;

  SECTION("classic trajectory sample count and finiteness") {
    const auto traj = integrate(spec, x0, {0.0, 2.0}, 0.001);
    REQUIRE(traj.states.front().rows() == 2001);
    REQUIRE(traj.states.front().allFinite());
  }

  SECTION("origin is an equilibrium") {
    const auto traj = integrate(spec, Vector::Zero(3), {0.0, 1.0}, 0.01);
    REQUIRE(traj.states.front().cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("dimension mismatch is rejected") {
    REQUIRE_THROWS_AS(integrate(spec, Vector::Zero(4), {0.0, 1.0}, 0.01),
                      std::invalid_argument);
  }
}

TEST_CASE("RK4 self-convergence order on Lorenz") {
  const auto spec = lorenz3_spec();
  Vector x0(3);
  x0 << -8.0, 8.0, 27.0;
  const auto rhs = make_rhs(spec);
  const double T = 1.0;
  const Vector f1 = rk4_advance(rhs, x0, 0.0, 1000, T / 1000);
  const Vector f2 = rk4_advance(rhs, x0, 0.0, 2000, T / 2000);
  const Vector f4 = rk4_advance(rhs, x0, 0.0, 4000, T / 4000);
  const double order = std::log2((f1 - f2).norm() / (f2 - f4).norm());
  CHECK(order >= 3.5);
}

TEST_CASE("Rossler z-maxima match a half-step reference") {
  const auto spec = rossler_spec();
  Vector x0(3);
  x0 << 1.0, 1.0, 1.0;
  const double dt = 0.005;
  const auto coarse = integrate(spec, x0, {0.0, 50.0}, dt);
  const auto fine = integrate(spec, x0, {0.0, 50.0}, dt / 2);

  auto z_maxima = [](const Matrix& m, int stride) {
    std::vector<double> out;
    for (Eigen::Index i = stride; i + stride < m.rows(); i += stride) {
      const double z = m(i, 2);
      if (z > m(i - stride, 2) && z > m(i + stride, 2) && z > 1.0) out.push_back(z);
    }
    return out;
  };
  const auto mc = z_maxima(coarse.states.front(), 1);
  const auto mf = z_maxima(fine.states.front(), 2);
  REQUIRE(mc.size() == mf.size());
  REQUIRE(!mc.empty());
  for (std::size_t i = 0; i < mc.size(); ++i) CHECK(mc[i] == Catch::Approx(mf[i]).margin(1e-4));
}

TEST_CASE("Duffing chain matches its published linearization") {
  auto spec = duffing_chain_spec(0.0, 2.0);  // unforced
  const auto rhs = make_rhs(spec);
  const auto vals = sorted_eigenvalues(numerical_jacobian(rhs, Vector::Zero(8)));
  // reference spectrum of the unstable origin
  CHECK(vals[0].real() == Catch::Approx(1.2204).margin(2e-3));
  CHECK(vals[0].imag() == Catch::Approx(0.0).margin(1e-8));
  CHECK(vals[7].real() == Catch::Approx(-5.8047).margin(2e-3));
  bool found_slow_pair = false;
  for (const auto& v : vals)
    if (std::abs(v.real() + 1.5713) < 2e-3 && std::abs(std::abs(v.imag()) - 0.6269) < 2e-3)
      found_slow_pair = true;
  CHECK(found_slow_pair);
}

TEST_CASE("Unforced Duffing chain dissipates mechanical energy") {
  auto spec = duffing_chain_spec(0.0, 2.0);
  Vector x0(8);
  x0 << 0.5, -0.3, 1.2, 0.1, 0.0, 0.4, -0.2, 0.3;
  const auto traj = integrate(spec, x0, {0.0, 20.0}, 0.001);
  const Matrix& m = traj.states.front();

  Matrix K(4, 4);
  K << 2, -1, 0, 0, -1, 2, -1, 0, 0, -1, -1, -1, 0, 0, -1, 3;
  const Vector masses = (Vector(4) << 0.1, 0.1, 1.0, 0.1).finished();
  auto energy = [&](const Eigen::RowVectorXd& s) {
    const Vector x = s.head(4).transpose();
    const Vector v = s.tail(4).transpose();
    return 0.5 * v.dot(masses.asDiagonal() * v) + 0.5 * x.dot(K * x) +
           0.0625 * std::pow(x[2], 4);
  };
  double prev = energy(m.row(0));
  for (Eigen::Index i = 1; i < m.rows(); ++i) {
    const double e = energy(m.row(i));
    CHECK(e <= prev + 1e-10);
    prev = e;
  }
}

TEST_CASE("9D Lorenz origin spectrum matches the reference eigenvalues") {
  const auto spec = lorenz9_spec();
  const auto vals = sorted_eigenvalues(numerical_jacobian(make_rhs(spec), Vector::Zero(9)));
  const std::vector<double> expected = {1.9263,  -0.2741, -0.2741, -0.5,    -0.6667,
                                        -2.6667, -3.4263, -4.7259, -4.7259};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(vals[i].real() == Catch::Approx(expected[i]).margin(2e-3));
    CHECK(vals[i].imag() == Catch::Approx(0.0).margin(1e-6));
  }
}

TEST_CASE("Bistable analog equilibrium structure") {
  const auto spec = bistable_analog_spec();

  SECTION("mixed-mode origin spectrum") {
    const auto vals = sorted_eigenvalues(numerical_jacobian(make_rhs(spec), Vector::Zero(4)));
    CHECK(vals[0].real() > 0.0);
    CHECK(vals[0].imag() == Catch::Approx(0.0).margin(1e-8));
    int negative_real_parts = 0, complex_count = 0;
    for (std::size_t i = 1; i < vals.size(); ++i) {
      if (vals[i].real() < 0.0) ++negative_real_parts;
      if (std::abs(vals[i].imag()) > 1e-8) ++complex_count;
    }
    CHECK(negative_real_parts == 3);
    CHECK(complex_count == 2);
  }

  SECTION("zero nonlinearity reduces to the linear modal analysis") {
    auto linear = spec;
    linear.parameters["beta"] = 0.0;
    const auto rhs = make_rhs(linear);
    Vector probe(4);
    probe << 0.7, -0.3, 0.2, 0.5;
    // for a linear system the Jacobian is state-independent
    const Matrix J0 = numerical_jacobian(rhs, Vector::Zero(4));
    const Matrix Jp = numerical_jacobian(rhs, probe);
    CHECK((J0 - Jp).cwiseAbs().maxCoeff() < 1e-6);
  }

  SECTION("unforced trajectories settle into a buckled state") {
    Vector x0(4);
    x0 << 0.01, 0.0, 0.0, 0.0;
    const auto traj = integrate(spec, x0, {0.0, 200.0}, 0.01);
    const Vector final = traj.states.front().bottomRows(1).transpose();
    const double k1 = spec.param("k1"), kap = spec.param("kappa"), k2 = spec.param("k2");
    // buckled states of the coupled system: x2 = kap x1 / (k2 + kap)
    const double x2_over_x1 = kap / (k2 + kap);
    const double x1_star = std::sqrt((k1 - kap * (1.0 - x2_over_x1)) / spec.param("beta"));
    CHECK(std::abs(final[0]) == Catch::Approx(x1_star).margin(1e-4));
    CHECK(final[2] == Catch::Approx(0.0).margin(1e-6));
    CHECK(final[3] == Catch::Approx(0.0).margin(1e-6));
  }
}

TEST_CASE("Blow-up during integration is reported with its time") {
  const OdeRhs quad = [](double, const Vector& x) { return Vector(x.array().square()); };
  Vector x0(1);
  x0 << 1.0;
  try {
    rk4_integrate(quad, x0, 0.0, 10000, 0.01);
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.time > 0.5);
    CHECK(e.time < 2.0);
  }
}

TEST_CASE("Forcing is rejected on autonomous-only systems") {
  auto spec = lorenz3_spec();
  spec.forcing = Forcing{1.0, 1.0, 0.0};
  REQUIRE_THROWS_AS(make_rhs(spec), std::invalid_argument);
}
