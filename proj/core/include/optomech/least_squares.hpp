#pragma once

#include <functional>

#include <Eigen/Core>

namespace optomech {

struct LeastSquaresOptions {
  int max_iterations = 200;
  double step_tolerance = 1.0e-8;  ///< on ‖Δx / scale‖∞
  double initial_damping = 1.0e-3;
  double jacobian_step = 1.0e-7;   ///< relative central-difference step
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::MatrixXd covariance;  ///< s² (JᵀJ)⁻¹ with s² = cost/(m - n)
  double cost = 0.0;           ///< sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Levenberg–Marquardt with a central-difference Jacobian. `scale` sets the
/// natural size of each parameter; both the finite-difference steps and the
/// convergence test are relative to it.
LeastSquaresResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& scale,
                                       const LeastSquaresOptions& options = {});

}  // namespace optomech
