#include "optomech/least_squares.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace optomech {

namespace {

Eigen::MatrixXd jacobian(const ResidualFunction& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& scale, double rel_step, Eigen::Index m) {
  Eigen::MatrixXd j(m, x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = rel_step * scale[k];
    xp[k] = x[k] + h;
    const Eigen::VectorXd fp = f(xp);
    xp[k] = x[k] - h;
    const Eigen::VectorXd fm = f(xp);
    xp[k] = x[k];
    j.col(k) = (fp - fm) / (2.0 * h);
  }
  return j;
}

}  // namespace

LeastSquaresResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& scale,
                                       const LeastSquaresOptions& options) {
  LeastSquaresResult out;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  double damping = options.initial_damping;
  const Eigen::Index n = x.size();

  Eigen::MatrixXd j = jacobian(residuals, x, scale, options.jacobian_step, r.size());
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    // Work in scaled coordinates u = x / scale.
    const Eigen::MatrixXd js = j * scale.asDiagonal();
    const Eigen::MatrixXd jtj = js.transpose() * js;
    const Eigen::VectorXd g = js.transpose() * r;

    bool accepted = false;
    Eigen::VectorXd du;
    while (damping < 1.0e16) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1.0e-30);
      du = lhs.ldlt().solve(-g);
      const Eigen::VectorXd trial = x + scale.cwiseProduct(du);
      const Eigen::VectorXd rt = residuals(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct <= cost) {
        x = trial;
        r = rt;
        cost = ct;
        damping = std::max(damping / 10.0, 1.0e-12);
        accepted = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) {
      // No downhill step exists at any damping: already at a minimum to
      // working precision.
      out.converged = true;
      break;
    }
    j = jacobian(residuals, x, scale, options.jacobian_step, r.size());
    if (du.cwiseAbs().maxCoeff() < options.step_tolerance) {
      out.converged = true;
      ++out.iterations;
      break;
    }
  }

  out.x = x;
  out.cost = cost;
  const Eigen::MatrixXd js = j * scale.asDiagonal();
  const Eigen::MatrixXd jtj = js.transpose() * js;
  const double dof = static_cast<double>(std::max<Eigen::Index>(r.size() - n, 1));
  out.covariance = scale.asDiagonal() *
                   ((cost / dof) * jtj.completeOrthogonalDecomposition().pseudoInverse()) *
                   scale.asDiagonal();
  return out;
}

}  // namespace optomech
