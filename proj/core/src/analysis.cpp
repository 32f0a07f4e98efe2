#include "optomech/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "optomech/errors.hpp"
#include "optomech/least_squares.hpp"

namespace optomech {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenerate = 1.0e-6;
constexpr std::size_t kMinSamples = 100;

Eigen::Vector2d rotated(const Eigen::Vector2d& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

}  // namespace

CorrelationMatrix correlation_matrix(const CovarianceMatrix& v) {
  const Eigen::Vector4d diag = v.v.diagonal();
  if ((diag.array() <= 0.0).any()) {
    throw InvalidArgument("correlation matrix needs strictly positive variances");
  }
  const Eigen::Vector4d inv_sd = diag.cwiseSqrt().cwiseInverse();
  CorrelationMatrix out;
  out.c = inv_sd.asDiagonal() * v.v * inv_sd.asDiagonal();
  out.c.diagonal().setOnes();
  return out;
}

double wrap_axis_angle(double theta) {
  double t = std::fmod(theta, kPi);
  if (t > kPi / 2.0) t -= kPi;
  if (t <= -kPi / 2.0) t += kPi;
  return t;
}

std::vector<double> unwrap_axis_angles(std::span<const double> theta) {
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double jump = out[i] - out[i - 1];
    out[i] -= kPi * std::round(jump / kPi);
  }
  return out;
}

PrincipalAxes principal_axes(const Eigen::Matrix2d& block) {
  const double a = block(0, 0);
  const double b = 0.5 * (block(0, 1) + block(1, 0));
  const double c = block(1, 1);
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);

  PrincipalAxes out;
  out.var_max = mean + radius;
  out.var_min = mean - radius;
  out.degenerate = (out.var_max - out.var_min) < kDegenerate * std::abs(out.var_max);
  const double major = 0.5 * std::atan2(2.0 * b, a - c);
  out.theta = wrap_axis_angle(major + kPi / 2.0);
  return out;
}

PrincipalAxes principal_axes(const CovarianceMatrix& v, Mode mode) {
  return principal_axes(v.block(mode));
}

GainResult quadrature_gain(const CovarianceMatrix& v_on, const CovarianceMatrix& v_off,
                           Mode mode) {
  const Eigen::Matrix2d on = v_on.block(mode);
  const Eigen::Matrix2d off = v_off.block(mode);
  const PrincipalAxes axes = principal_axes(on);

  GainResult out;
  if (axes.degenerate) {
    const double gx = std::sqrt(on(0, 0) / off(0, 0));
    const double gy = std::sqrt(on(1, 1) / off(1, 1));
    out.g_squeezed = std::min(gx, gy);
    out.g_antisqueezed = std::max(gx, gy);
    out.degenerate = true;
    return out;
  }
  const Eigen::Vector2d u_min(std::cos(axes.theta), std::sin(axes.theta));
  const Eigen::Vector2d u_max(-u_min.y(), u_min.x());
  out.g_squeezed = std::sqrt(axes.var_min / u_min.dot(off * u_min));
  out.g_antisqueezed = std::sqrt(axes.var_max / u_max.dot(off * u_max));
  return out;
}

double AxisRange::at(std::size_t i) const {
  if (points < 2) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
}

WignerGrid wigner_gaussian(const CovarianceMatrix& v, Mode mode, const AxisRange& x,
                           const AxisRange& y, double axis_scale) {
  if (!(axis_scale > 0.0)) throw InvalidArgument("axis scale must be positive");
  const Eigen::Matrix2d b = v.block(mode) / (axis_scale * axis_scale);
  const Eigen::LLT<Eigen::Matrix2d> llt(b);
  const double det = b.determinant();
  if (llt.info() != Eigen::Success || !(det > 0.0)) {
    throw InvalidArgument("Wigner function needs a positive-definite mode block");
  }
  const Eigen::Matrix2d inv = b.inverse();
  const double norm = 1.0 / (2.0 * kPi * std::sqrt(det));

  WignerGrid out{x, y, Eigen::MatrixXd(x.points, y.points)};
  for (std::size_t i = 0; i < x.points; ++i) {
    for (std::size_t j = 0; j < y.points; ++j) {
      const Eigen::Vector2d r(x.at(i), y.at(j));
      out.w(i, j) = norm * std::exp(-0.5 * r.dot(inv * r));
    }
  }
  return out;
}

double integrate(const WignerGrid& grid) {
  const auto nx = static_cast<Eigen::Index>(grid.x.points);
  const auto ny = static_cast<Eigen::Index>(grid.y.points);
  if (nx < 2 || ny < 2) return 0.0;
  Eigen::VectorXd wx = Eigen::VectorXd::Ones(nx);
  Eigen::VectorXd wy = Eigen::VectorXd::Ones(ny);
  wx[0] = wx[nx - 1] = 0.5;
  wy[0] = wy[ny - 1] = 0.5;
  const double hx = (grid.x.hi - grid.x.lo) / static_cast<double>(nx - 1);
  const double hy = (grid.y.hi - grid.y.lo) / static_cast<double>(ny - 1);
  return hx * hy * wx.dot(grid.w * wy);
}

GaussianFit rotate_project_fit(std::span<const Eigen::Vector2d> samples, double phi,
                               GaussianEstimator estimator) {
  if (samples.size() < kMinSamples) {
    throw InvalidArgument("insufficient statistics: need at least 100 samples");
  }
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Eigen::VectorXd proj(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    proj[static_cast<Eigen::Index>(i)] = c * samples[i].x() + s * samples[i].y();
  }
  const double n = static_cast<double>(proj.size());
  const double mu = proj.mean();
  const double sigma = std::sqrt((proj.array() - mu).square().sum() / (n - 1.0));
  if (estimator == GaussianEstimator::moments) return {mu, sigma};

  const auto bins = static_cast<Eigen::Index>(std::ceil(std::sqrt(n)));
  const double lo = proj.minCoeff();
  const double hi = proj.maxCoeff();
  const double width = (hi - lo) / static_cast<double>(bins);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    const auto k = std::min<Eigen::Index>(
        static_cast<Eigen::Index>((proj[i] - lo) / width), bins - 1);
    counts[k] += 1.0;
  }
  Eigen::VectorXd centers(bins);
  for (Eigen::Index k = 0; k < bins; ++k) centers[k] = lo + (static_cast<double>(k) + 0.5) * width;

  auto residuals = [&](const Eigen::VectorXd& p) {
    const Eigen::ArrayXd z = (centers.array() - p[1]) / p[2];
    return Eigen::VectorXd(p[0] * (-0.5 * z.square()).exp() - counts.array());
  };
  Eigen::VectorXd p0(3);
  p0 << n * width / (std::sqrt(2.0 * kPi) * sigma), mu, sigma;
  Eigen::VectorXd scale(3);
  scale << p0[0], sigma, sigma;
  const LeastSquaresResult fit = levenberg_marquardt(residuals, p0, scale);
  return {fit.x[1], std::abs(fit.x[2])};
}

Eigen::Matrix2d sample_covariance(std::span<const Eigen::Vector2d> samples) {
  if (samples.size() < 2) throw InvalidArgument("need at least two samples");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : samples) mean += p;
  mean /= static_cast<double>(samples.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : samples) {
    const Eigen::Vector2d d = p - mean;
    cov += d * d.transpose();
  }
  return cov / static_cast<double>(samples.size() - 1);
}

std::vector<Eigen::Vector2d> mode_samples(const QuadratureTrace& trace, Mode mode) {
  const auto k = static_cast<Eigen::Index>(2 * index(mode));
  std::vector<Eigen::Vector2d> out;
  out.reserve(trace.q.size());
  for (const auto& q : trace.q) out.emplace_back(q[k], q[k + 1]);
  return out;
}

QuadratureTrace align_control_axis(const QuadratureTrace& trace) {
  const auto control = mode_samples(trace, Mode::control);
  const PrincipalAxes axes = principal_axes(sample_covariance(control));
  if (axes.degenerate) {
    throw InvalidArgument("control-mode noise is isotropic; squeezing axis undefined");
  }
  QuadratureTrace out = trace;
  for (auto& q : out.q) {
    const Eigen::Vector2d m1 = rotated({q[kX1], q[kY1]}, -axes.theta);
    const Eigen::Vector2d m2 = rotated({q[kX2], q[kY2]}, -axes.theta);
    q << m1.x(), m1.y(), m2.x(), m2.y();
  }
  return out;
}

}  // namespace optomech
