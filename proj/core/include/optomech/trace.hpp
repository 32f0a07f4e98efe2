#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace optomech {

/// Time series of slow-envelope quadratures (X1, Y1, X2, Y2) on a uniform grid.
struct QuadratureTrace {
  std::vector<double> t;
  std::vector<Eigen::Vector4d> q;
  std::uint64_t seed = 0;
  std::size_t index = 0;  ///< trajectory index within its ensemble
  double dt = 0.0;        ///< integrator step, not the sampling interval

  std::size_t size() const { return t.size(); }
};

}  // namespace optomech
