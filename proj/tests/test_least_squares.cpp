#include <doctest.h>

#include <cmath>

#include "speckle/least_squares.hpp"

using namespace speckle;

TEST_CASE("Levenberg-Marquardt solves the Rosenbrock problem") {
  const auto residuals = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2);
    r << 10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0];
    return r;
  };
  Eigen::VectorXd start(2), lo(2), hi(2);
  start << -1.2, 1.0;
  lo << -10, -10;
  hi << 10, 10;
  const LmResult r = levenberg_marquardt(residuals, start, lo, hi);
  CHECK(r.converged);
  CHECK(r.parameters[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.parameters[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.chi2 < 1e-16);
}

TEST_CASE("linear least squares gives the textbook covariance") {
  // y = 2 + 3 x, exact data; covariance equals (X^T X)^-1.
  const std::vector<double> x{0, 1, 2, 3, 4, 5};
  const auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) r[static_cast<Eigen::Index>(i)] = 2 + 3 * x[i] - (p[0] + p[1] * x[i]);
    return r;
  };
  Eigen::VectorXd start = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -100), hi = Eigen::VectorXd::Constant(2, 100);
  const LmResult r = levenberg_marquardt(residuals, start, lo, hi);
  CHECK(r.parameters[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.parameters[1] == doctest::Approx(3.0).epsilon(1e-10));
  Eigen::MatrixXd X(6, 2);
  for (int i = 0; i < 6; ++i) X.row(i) << 1.0, x[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd expect = (X.transpose() * X).inverse();
  CHECK((r.covariance - expect).norm() < 1e-6 * expect.norm());
}

TEST_CASE("bounds are respected") {
  const auto residuals = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(1);
    r << p[0] - 5.0;
    return r;
  };
  Eigen::VectorXd start(1), lo(1), hi(1);
  start << 0.0;
  lo << -1.0;
  hi << 2.0;
  const LmResult r = levenberg_marquardt(residuals, start, lo, hi);
  CHECK(r.parameters[0] <= 2.0);
  CHECK(r.parameters[0] == doctest::Approx(2.0).epsilon(1e-6));
}
