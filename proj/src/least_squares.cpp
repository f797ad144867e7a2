#include "speckle/least_squares.hpp"

#include <algorithm>
#include <cmath>

namespace speckle {

namespace {

Eigen::MatrixXd jacobian(const ResidualFunction& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         Eigen::Index rows) {
  Eigen::MatrixXd jac(rows, x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * std::max(std::abs(x[k]), 1e-8);
    Eigen::VectorXd hi = x, lo = x;
    hi[k] = std::min(x[k] + h, upper[k]);
    lo[k] = std::max(x[k] - h, lower[k]);
    const double span = hi[k] - lo[k];
    if (span <= 0.0) {
      jac.col(k).setZero();
      continue;
    }
    jac.col(k) = (f(hi) - f(lo)) / span;
  }
  return jac;
}

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const LmOptions& options) {
  LmResult result;
  Eigen::VectorXd x = project(std::move(start), lower, upper);
  Eigen::VectorXd r = residuals(x);
  double chi2 = r.squaredNorm();
  double damping = options.initial_damping;

  if (!std::isfinite(chi2)) {
    result.parameters = x;
    return result;
  }

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = jacobian(residuals, x, lower, upper, r.size());
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-30);

    bool improved = false;
    double new_chi2 = chi2;
    Eigen::VectorXd candidate;
    Eigen::VectorXd candidate_r;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += damping * diag;
      // r = y - m, so d(chi2)/dx = -2 J^T r with J = dr/dx; step solves (J^T J) dx = -J^T r.
      const Eigen::VectorXd step = lhs.ldlt().solve(-gradient);
      candidate = project(x + step, lower, upper);
      candidate_r = residuals(candidate);
      new_chi2 = candidate_r.squaredNorm();
      if (std::isfinite(new_chi2) && new_chi2 < chi2) {
        improved = true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) {
      // No descent direction left: at a (possibly constrained) minimum.
      result.converged = true;
      break;
    }

    const double decrease = chi2 - new_chi2;
    const double step_norm = (candidate - x).norm();
    x = candidate;
    r = candidate_r;
    chi2 = new_chi2;
    damping = std::max(damping * 0.3, 1e-12);
    if (decrease <= options.relative_tolerance * std::max(chi2, 1e-300) ||
        step_norm <= options.relative_tolerance * std::max(x.norm(), 1e-300)) {
      result.converged = true;
      ++iter;
      break;
    }
  }

  const Eigen::MatrixXd jac = jacobian(residuals, x, lower, upper, r.size());
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  result.covariance = lu.isInvertible()
                          ? Eigen::MatrixXd(lu.inverse())
                          : Eigen::MatrixXd::Constant(x.size(), x.size(),
                                                      std::numeric_limits<double>::quiet_NaN());
  result.parameters = x;
  result.chi2 = chi2;
  result.iterations = iter;
  return result;
}

}  // namespace speckle
