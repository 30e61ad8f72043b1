#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trimfit/constraints.hpp"

namespace trimfit {

enum class ShapeKind {
  MonotoneIncreasing,
  MonotoneDecreasing,
  Convex,
  Concave,
  LinearTailLeft,   // second derivative forced to 0 on the first segment
  LinearTailRight,  // same on the last segment
};

// Clamped B-spline basis on [lo, hi]: boundary knots repeated degree+1 times,
// strictly increasing interior knots inside (lo, hi). dim = interior + degree
// + 1. Evaluation outside [lo, hi] is a DomainError: these bases do not
// extrapolate.
class SplineBasis {
 public:
  SplineBasis(double lo, double hi, std::vector<double> interior_knots, int degree);

  int degree() const { return degree_; }
  int dim() const { return dim_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int n_segments() const { return static_cast<int>(interior_.size()) + 1; }
  const std::vector<double>& knots() const { return knots_; }  // full clamped vector

  // Basis row at t; nonneg entries summing to 1 (partition of unity).
  Eigen::VectorXd eval(double t) const;
  Eigen::MatrixXd design(const Eigen::VectorXd& t) const;  // one row per entry

  // Value of the order-th derivative basis row at t (order 0 = eval).
  Eigen::VectorXd eval_derivative(double t, int order) const;

  // Linear map from coefficients to the coefficients of the order-th
  // derivative, a degree (degree - order) spline: (dim - order) x dim.
  Eigen::MatrixXd derivative_map(int order) const;

  // Row x with <x, coeffs> = average of the spline over [a0, a1], exact via
  // the antiderivative recurrence. a0 == a1 degenerates to eval(a0).
  Eigen::VectorXd average_integral_row(double a0, double a1) const;

 private:
  int find_span(double t) const;
  void check_domain(double t) const;

  double lo_, hi_;
  int degree_;
  std::vector<double> interior_;
  std::vector<double> knots_;
  int dim_;
};

// Inequality rows over the coefficient block enforcing the requested shapes:
// monotonicity as bidiagonal first-difference rows, convexity/concavity as
// sign constraints on the second-derivative coefficients, linear tails as
// equalities (emitted as paired inequalities) zeroing the boundary segment's
// second-derivative coefficients.
LinearConstraintSet shape_constraints(const SplineBasis& basis,
                                      const std::vector<ShapeKind>& shapes);

// Gaussian prior N(mean 0, sd) on the highest (degree-th) derivative in each
// segment; A has n_segments rows. Degree 0 maps to the coefficients
// themselves.
GaussianPrior highest_derivative_prior(const SplineBasis& basis, double sd);

// Interior knot placement at the requested quantiles (type-7) of observed
// values. Returned knots are strictly increasing; duplicates collapse.
std::vector<double> quantile_knots(Eigen::VectorXd values, const std::vector<double>& probs);

}  // namespace trimfit
