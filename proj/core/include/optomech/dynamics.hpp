#pragma once

// Rotating-frame linear dynamics of the two mechanical quadrature pairs.
//
// State ordering is (X1, Y1, X2, Y2) everywhere, with X = (b + b†)/√2 and
// Y = (b - b†)/(i√2). Quadratures are dimensionless; the vacuum variance is 1/2.

#include <array>

#include <Eigen/Core>

#include "optomech/model.hpp"

namespace optomech {

using Matrix4 = Eigen::Matrix4d;
using Vector4 = Eigen::Vector4d;

inline constexpr int kX1 = 0;
inline constexpr int kY1 = 1;
inline constexpr int kX2 = 2;
inline constexpr int kY2 = 3;

/// dq/dt = A q + noise.
struct DriftMatrix {
  Matrix4 a = Matrix4::Zero();
};

/// Noise intensity, <dW dWᵀ> = D dt.
struct DiffusionMatrix {
  Matrix4 d = Matrix4::Zero();
};

/// Symmetrized second moments V_ij = ½<q_i q_j + q_j q_i>.
struct CovarianceMatrix {
  Matrix4 v = Matrix4::Zero();

  Eigen::Matrix2d block(Mode m) const {
    const int k = 2 * static_cast<int>(index(m));
    return v.block<2, 2>(k, k);
  }
};

/// Drift matrix of the Heisenberg–Langevin equations
///
///   ḃ₁ = -γ₁/2 b₁ - i g_t e^{-iφ_t} b₂ + 2 i g_s e^{iφ_s} b₁†
///   ḃ₂ = -γ₂/2 b₂ - i g_t e^{+iφ_t} b₁
///
/// expanded into quadratures. The squeezing block of mode 1 is
/// 2 g_s [[-sin φ_s, cos φ_s], [cos φ_s, sin φ_s]] and the beam-splitter part
/// is antisymmetric, so trace(A) = -(γ₁ + γ₂) for every input.
DriftMatrix drift_matrix(const std::array<double, 2>& gamma, double g_s, double g_t,
                         double phi_s, double phi_t);

DriftMatrix drift_matrix(const SystemParams& params, const EffectiveCouplings& couplings,
                         const DriveConfig& drive);

/// diag(γ₁(n₁+½), γ₁(n₁+½), γ₂(n₂+½), γ₂(n₂+½)).
DiffusionMatrix diffusion_matrix(const std::array<double, 2>& gamma,
                                 const std::array<double, 2>& n_bath);

/// Largest real part over the eigenvalues of A.
double spectral_abscissa(const DriftMatrix& a);

/// True iff every eigenvalue has real part below -1e-12·‖A‖∞. Marginal
/// systems count as unstable.
bool is_stable(const DriftMatrix& a);

/// Solves A V + V Aᵀ + D = 0 through the 16-unknown Kronecker system with one
/// step of iterative refinement. Throws InstabilityError when A is not stable.
CovarianceMatrix solve_steady_covariance(const DriftMatrix& a, const DiffusionMatrix& d);

/// ‖A V + V Aᵀ + D‖∞.
double lyapunov_residual(const DriftMatrix& a, const DiffusionMatrix& d, const CovarianceMatrix& v);

/// Convenience: drift and diffusion for (params, drive), then the Lyapunov
/// solution.
CovarianceMatrix steady_covariance(const SystemParams& params, const DriveConfig& drive);

/// Covariance with both modulations off, (n_j + ½) on each quadrature.
CovarianceMatrix off_state_covariance(const SystemParams& params);

/// Smallest β_s at which the system loses stability, with β_t held at
/// `beta_t_fixed` and everything else from `drive_template`. The first
/// unstable point is bracketed on a uniform grid up to 10·β_th and then
/// bisected to a relative width of 1e-6.
double instability_threshold(const SystemParams& params, const DriveConfig& drive_template,
                             double beta_t_fixed);

}  // namespace optomech
