#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "optomech/dynamics.hpp"
#include "optomech/model.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

// Primed-phase offsets used by the CLI defaults: φ' = φ + off.
inline constexpr double kOffS = 3.0 * kPi / 2.0;
inline constexpr double kOffT = kPi / 2.0;

inline optomech::DriveConfig primed(const optomech::SystemParams& sys, double ps, double pt) {
  optomech::DriveConfig d = optomech::reference_drive(sys);
  d.phi_s = ps - kOffS;
  d.phi_t = pt - kOffT;
  return d;
}

inline double rel_err(double got, double want) { return std::abs(got / want - 1.0); }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline std::string first_line(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("optomech_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Drift matrix as printed in the (X1, X2, Y1, Y2) ordering, with its
// squeezing off-diagonal written in terms of φ_t. Only meaningful where it
// coincides with the Heisenberg–Langevin derivation.
inline optomech::Matrix4 printed_drift(const std::array<double, 2>& gamma, double gs, double gt,
                                       double ps, double pt) {
  optomech::Matrix4 p;
  p << -gamma[0] / 2 - 2 * gs * std::sin(ps), -gt * std::sin(pt), 2 * gs * std::cos(pt),
      gt * std::cos(pt),  //
      gt * std::sin(pt), -gamma[1] / 2, gt * std::cos(pt), 0.0,  //
      2 * gs * std::cos(pt), -gt * std::cos(pt), -gamma[0] / 2 + 2 * gs * std::sin(ps),
      gt * std::sin(pt),  //
      -gt * std::cos(pt), 0.0, -gt * std::sin(pt), -gamma[1] / 2;
  // (X1, X2, Y1, Y2) -> (X1, Y1, X2, Y2)
  const int perm[4] = {0, 2, 1, 3};
  optomech::Matrix4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = p(perm[i], perm[j]);
  return out;
}

}  // namespace testing
