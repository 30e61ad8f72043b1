#pragma once

#include <Eigen/Dense>
#include <functional>

namespace trimfit {

// Linear inequalities C x <= c. The width (columns of C) says which parameter
// vector the set applies to: spline shape constraints are emitted over the
// coefficient (beta) block and lifted to the full flattened theta by
// lift_beta_constraints before they enter a ModelSpec.
struct LinearConstraintSet {
  Eigen::MatrixXd C;
  Eigen::VectorXd c;

  static LinearConstraintSet empty(int width) {
    return {Eigen::MatrixXd::Zero(0, width), Eigen::VectorXd::Zero(0)};
  }
  int rows() const { return static_cast<int>(C.rows()); }
  int width() const { return static_cast<int>(C.cols()); }

  void append(const LinearConstraintSet& other);
};

// Smooth inequality rows evaluator(x) <= upper over a parameter vector x.
struct NonlinearConstraint {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> evaluator;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;  // rows x dim(x)
  Eigen::VectorXd upper;
};

// Gaussian penalty 1/2 * || (A beta - mean) ./ sd ||^2.
struct GaussianPrior {
  Eigen::MatrixXd A;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

}  // namespace trimfit
