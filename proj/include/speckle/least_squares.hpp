#pragma once

#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace speckle {

/// Residual function: parameters -> weighted residuals (y_i - m_i) / sigma_i.
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
  int max_iterations = 300;
  double relative_tolerance = 1e-12;  ///< on chi^2 decrease and step size
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;  ///< (J^T J)^-1 at the solution
  double chi2 = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling, central-difference
/// Jacobian and box constraints enforced by projection.
LmResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const LmOptions& options = {});

}  // namespace speckle
