#include "optomech/dynamics.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "optomech/errors.hpp"

namespace optomech {

namespace {

constexpr double kStabilityMargin = 1.0e-12;
constexpr double kThresholdRelWidth = 1.0e-6;
constexpr int kBracketSteps = 200;

using Matrix16 = Eigen::Matrix<double, 16, 16>;
using Vector16 = Eigen::Matrix<double, 16, 1>;

// Column-major vec: vec(A V + V Aᵀ) = (I ⊗ A + A ⊗ I) vec(V).
Matrix16 lyapunov_operator(const Matrix4& a) {
  Matrix16 k = Matrix16::Zero();
  for (int i = 0; i < 4; ++i) {
    k.block<4, 4>(4 * i, 4 * i) += a;  // I ⊗ A
    for (int j = 0; j < 4; ++j) {
      k.block<4, 4>(4 * i, 4 * j).diagonal().array() += a(i, j);  // A ⊗ I
    }
  }
  return k;
}

double inf_norm(const Matrix4& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

DriftMatrix drift_matrix(const std::array<double, 2>& gamma, double g_s, double g_t,
                         double phi_s, double phi_t) {
  DriftMatrix out;
  Matrix4& a = out.a;
  a.diagonal() << -gamma[0] / 2.0, -gamma[0] / 2.0, -gamma[1] / 2.0, -gamma[1] / 2.0;

  const double ss = std::sin(phi_s);
  const double cs = std::cos(phi_s);
  a(kX1, kX1) += -2.0 * g_s * ss;
  a(kX1, kY1) += 2.0 * g_s * cs;
  a(kY1, kX1) += 2.0 * g_s * cs;
  a(kY1, kY1) += 2.0 * g_s * ss;

  const double st = std::sin(phi_t);
  const double ct = std::cos(phi_t);
  a(kX1, kX2) = -g_t * st;
  a(kX1, kY2) = g_t * ct;
  a(kY1, kX2) = -g_t * ct;
  a(kY1, kY2) = -g_t * st;
  a(kX2, kX1) = g_t * st;
  a(kX2, kY1) = g_t * ct;
  a(kY2, kX1) = -g_t * ct;
  a(kY2, kY1) = g_t * st;
  return out;
}

DriftMatrix drift_matrix(const SystemParams& params, const EffectiveCouplings& couplings,
                         const DriveConfig& drive) {
  return drift_matrix(params.gamma_m, couplings.g_s, couplings.g_t, drive.phi_s, drive.phi_t);
}

DiffusionMatrix diffusion_matrix(const std::array<double, 2>& gamma,
                                 const std::array<double, 2>& n_bath) {
  for (double n : n_bath) {
    if (!(n >= 0.0)) throw InvalidArgument("bath occupation must be non-negative");
  }
  DiffusionMatrix out;
  const double d1 = gamma[0] * (n_bath[0] + 0.5);
  const double d2 = gamma[1] * (n_bath[1] + 0.5);
  out.d.diagonal() << d1, d1, d2, d2;
  return out;
}

double spectral_abscissa(const DriftMatrix& a) {
  Eigen::EigenSolver<Matrix4> solver(a.a, false);
  return solver.eigenvalues().real().maxCoeff();
}

bool is_stable(const DriftMatrix& a) {
  const double eps = kStabilityMargin * inf_norm(a.a);
  return spectral_abscissa(a) < -eps;
}

CovarianceMatrix solve_steady_covariance(const DriftMatrix& a, const DiffusionMatrix& d) {
  if (!is_stable(a)) throw InstabilityError();

  const Matrix16 k = lyapunov_operator(a.a);
  const Eigen::FullPivLU<Matrix16> lu(k);
  const Vector16 rhs = -Eigen::Map<const Vector16>(d.d.data());
  Vector16 x = lu.solve(rhs);
  x += lu.solve(rhs - k * x);

  CovarianceMatrix out;
  out.v = Eigen::Map<const Matrix4>(x.data());
  out.v = 0.5 * (out.v + out.v.transpose()).eval();
  return out;
}

double lyapunov_residual(const DriftMatrix& a, const DiffusionMatrix& d,
                         const CovarianceMatrix& v) {
  return inf_norm(a.a * v.v + v.v * a.a.transpose() + d.d);
}

CovarianceMatrix steady_covariance(const SystemParams& params, const DriveConfig& drive) {
  const EffectiveCouplings c = effective_couplings(params, drive);
  return solve_steady_covariance(drift_matrix(params, c, drive),
                                 diffusion_matrix(params.gamma_m, params.n_bath));
}

CovarianceMatrix off_state_covariance(const SystemParams& params) {
  CovarianceMatrix out;
  out.v.diagonal() << params.n_bath[0] + 0.5, params.n_bath[0] + 0.5, params.n_bath[1] + 0.5,
      params.n_bath[1] + 0.5;
  return out;
}

double instability_threshold(const SystemParams& params, const DriveConfig& drive_template,
                             double beta_t_fixed) {
  DriveConfig drive = drive_template;
  drive.beta_t = beta_t_fixed;
  auto stable_at = [&](double beta_s) {
    drive.beta_s = beta_s;
    return is_stable(drift_matrix(params, effective_couplings(params, drive), drive));
  };

  if (!stable_at(0.0)) {
    throw InvalidArgument("drive template is already unstable at beta_s = 0");
  }
  drive.beta_s = 0.0;
  const double beta_th = effective_couplings(params, drive).beta_th;
  const double upper = 10.0 * beta_th;

  double lo = 0.0;
  double hi = -1.0;
  for (int i = 1; i <= kBracketSteps; ++i) {
    const double b = upper * static_cast<double>(i) / kBracketSteps;
    if (!stable_at(b)) {
      hi = b;
      break;
    }
    lo = b;
  }
  if (hi < 0.0) throw Error("threshold not bracketed below 10 beta_th");

  while (hi - lo > kThresholdRelWidth * hi) {
    const double mid = 0.5 * (lo + hi);
    (stable_at(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace optomech
