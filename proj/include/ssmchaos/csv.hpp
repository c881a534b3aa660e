#pragma once

#include "ssmchaos/trajectory.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ssm {

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Write one trajectory as CSV: header `t,x1,...,xn`, 17 significant digits.
/// Optional comment lines (e.g. a config hash) go before the header, prefixed
/// with '#'.
inline void write_trajectory_csv(const std::filesystem::path& path, const Matrix& traj,
                                 double dt, const std::vector<std::string>& comments = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "t";
  for (Eigen::Index j = 0; j < traj.cols(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < traj.rows(); ++i) {
    out << detail::format_double(static_cast<double>(i) * dt);
    for (Eigen::Index j = 0; j < traj.cols(); ++j)
      out << ',' << detail::format_double(traj(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

/// Read a trajectory CSV produced by write_trajectory_csv. Returns the state
/// matrix; dt is recovered from the time column.
inline Matrix read_trajectory_csv(const std::filesystem::path& path, double* dt_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  // skip comments, then the header
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') break;
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) throw std::runtime_error("parse error in " + path.string());
      vals.push_back(v);
      p = (ptr < end && *ptr == ',') ? ptr + 1 : ptr;
    }
    if (vals.empty()) continue;
    times.push_back(vals.front());
    rows.emplace_back(vals.begin() + 1, vals.end());
  }
  if (rows.empty()) throw std::runtime_error("empty trajectory file: " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw std::runtime_error("ragged rows in " + path.string());
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  if (dt_out) *dt_out = times.size() > 1 ? times[1] - times[0] : 0.0;
  return m;
}

/// Two-column plot-ready file (x, y).
inline void write_xy_csv(const std::filesystem::path& path, const Vector& x, const Vector& y,
                         const std::string& xname, const std::string& yname,
                         const std::vector<std::string>& comments = {}) {
  if (x.size() != y.size()) throw std::invalid_argument("write_xy_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const auto& c : comments) out << "# " << c << "\n";
  out << xname << ',' << yname << "\n";
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out << detail::format_double(x[i]) << ',' << detail::format_double(y[i]) << "\n";
}

}  // namespace ssm
