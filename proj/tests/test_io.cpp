#include <catch2/catch_amalgamated.hpp>

#include "ssmchaos/csv.hpp"
#include "ssmchaos/rng.hpp"

#include <filesystem>
#include <fstream>

using namespace ssm;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("Trajectory CSV round trip is bit exact") {
  Pcg64 rng(17);
  Matrix m(100, 3);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = rng.normal() * std::pow(10.0, rng.below(6)) * 1e-3;
  m(0, 0) = 1.0 / 3.0;  // needs all 17 significant digits
  m(1, 1) = -0.1;
  m(2, 2) = 1e-300;

  const auto path = temp_file("traj_roundtrip.csv");
  write_trajectory_csv(path, m, 0.01);
  double dt = 0.0;
  const Matrix back = read_trajectory_csv(path, &dt);
  std::filesystem::remove(path);

  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK(back == m);  // %.17g guarantees exact double round trips
  CHECK(dt == 0.01);
}

TEST_CASE("Trajectory CSV layout matches the documented format") {
  Matrix m(2, 2);
  m << 1.5, -2.0, 0.25, 1e10;
  const auto path = temp_file("traj_layout.csv");
  write_trajectory_csv(path, m, 0.5, {"config-hash: abc123"});
  const std::string text = read_all(path);
  std::filesystem::remove(path);

  CHECK(text.rfind("# config-hash: abc123\n", 0) == 0);
  CHECK(text.find("t,x1,x2\n") != std::string::npos);
  CHECK(text.find("0,1.5,-2\n") != std::string::npos);
  CHECK(text.find("0.5,0.25,10000000000\n") != std::string::npos);
}

TEST_CASE("Trajectory CSV reader skips comments and rejects bad input") {
  const auto path = temp_file("traj_bad.csv");

  SECTION("comment lines are skipped") {
    {
      std::ofstream out(path);
      out << "# one\n# two\nt,x1\n0,1.25\n0.1,2.5\n";
    }
    double dt = 0.0;
    const Matrix m = read_trajectory_csv(path, &dt);
    REQUIRE(m.rows() == 2);
    CHECK(m(0, 0) == 1.25);
    CHECK(m(1, 0) == 2.5);
    CHECK(dt == Catch::Approx(0.1));
  }

  SECTION("non-numeric rows are rejected") {
    {
      std::ofstream out(path);
      out << "t,x1\n0,abc\n";
    }
    CHECK_THROWS_AS(read_trajectory_csv(path), std::runtime_error);
  }

  SECTION("ragged rows are rejected") {
    {
      std::ofstream out(path);
      out << "t,x1,x2\n0,1,2\n0.1,3\n";
    }
    CHECK_THROWS_AS(read_trajectory_csv(path), std::runtime_error);
  }

  SECTION("empty files are rejected") {
    {
      std::ofstream out(path);
      out << "t,x1\n";
    }
    CHECK_THROWS_AS(read_trajectory_csv(path), std::runtime_error);
  }

  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_trajectory_csv(path), std::runtime_error);
}

TEST_CASE("XY CSV carries named columns") {
  Vector x(3), y(3);
  x << 0.0, 1.0, 2.0;
  y << 5.0, 2.5, 1.25;
  const auto path = temp_file("xy_test.csv");
  write_xy_csv(path, x, y, "time", "nmte");
  const std::string text = read_all(path);
  std::filesystem::remove(path);
  CHECK(text.rfind("time,nmte\n", 0) == 0);
  CHECK(text.find("1,2.5\n") != std::string::npos);
  CHECK_THROWS_AS(write_xy_csv(path, x, y.head(2), "a", "b"), std::invalid_argument);
}
