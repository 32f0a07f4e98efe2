#pragma once

// Figure-level observables extracted from covariance matrices and sampled
// quadratures.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "optomech/dynamics.hpp"
#include "optomech/trace.hpp"

namespace optomech {

struct CorrelationMatrix {
  Matrix4 c = Matrix4::Identity();
};

/// C_ij = V_ij / sqrt(V_ii V_jj). Throws InvalidArgument on a non-positive
/// diagonal entry.
CorrelationMatrix correlation_matrix(const CovarianceMatrix& v);

struct PrincipalAxes {
  double theta = 0.0;  ///< squeezed-axis angle from X_j, in (-π/2, π/2]
  double var_min = 0.0;
  double var_max = 0.0;
  bool degenerate = false;  ///< (var_max - var_min)/var_max < 1e-6; theta is meaningless
};

PrincipalAxes principal_axes(const Eigen::Matrix2d& block);
PrincipalAxes principal_axes(const CovarianceMatrix& v, Mode mode);

/// Maps any angle onto the (-π/2, π/2] branch of an axis direction.
double wrap_axis_angle(double theta);

/// Removes mod-π jumps from a sequence of axis angles.
std::vector<double> unwrap_axis_angles(std::span<const double> theta);

struct GainResult {
  double g_squeezed = 1.0;
  double g_antisqueezed = 1.0;
  bool degenerate = false;  ///< on-state block isotropic; gains taken on X/Y
};

/// Amplitude gains sqrt(var_on/var_off) along the principal axes of the
/// on-state block.
GainResult quadrature_gain(const CovarianceMatrix& v_on, const CovarianceMatrix& v_off, Mode mode);

struct AxisRange {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t points = 2;

  double at(std::size_t i) const;
};

struct WignerGrid {
  AxisRange x;
  AxisRange y;
  Eigen::MatrixXd w;  ///< w(i, j) = W(x_i, y_j)
};

/// Gaussian Wigner function of one mode's 2×2 block,
/// W(r) = exp(-½ rᵀ B⁻¹ r) / (2π sqrt(det B)).
///
/// With `axis_scale` s ≠ 1 the axes are in units of s (typically the off-state
/// standard deviation) and W is rescaled so it still integrates to one.
WignerGrid wigner_gaussian(const CovarianceMatrix& v, Mode mode, const AxisRange& x,
                           const AxisRange& y, double axis_scale = 1.0);

/// Trapezoid-rule integral of the grid.
double integrate(const WignerGrid& grid);

enum class GaussianEstimator { moments, histogram_fit };

struct GaussianFit {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Rotates every sample by -phi, keeps the first coordinate and estimates its
/// Gaussian parameters. `histogram_fit` bins into ceil(sqrt(N)) bins and fits a
/// Gaussian profile by least squares. Needs at least 100 samples.
GaussianFit rotate_project_fit(std::span<const Eigen::Vector2d> samples, double phi,
                               GaussianEstimator estimator = GaussianEstimator::moments);

/// Sample covariance of one mode's (X, Y) samples.
Eigen::Matrix2d sample_covariance(std::span<const Eigen::Vector2d> samples);

std::vector<Eigen::Vector2d> mode_samples(const QuadratureTrace& trace, Mode mode);

/// Rotates both modes by the single angle -θ₁, where θ₁ is the squeezing axis
/// of the control-mode samples. Throws InvalidArgument when the control block
/// is degenerate.
QuadratureTrace align_control_axis(const QuadratureTrace& trace);

}  // namespace optomech
