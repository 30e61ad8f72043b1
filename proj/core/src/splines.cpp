#include "trimfit/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trimfit/errors.hpp"
#include "trimfit/stats.hpp"

namespace trimfit {

namespace {

// Basis evaluation over an arbitrary knot vector (used for the main basis,
// the trimmed derivative bases and the extended antiderivative basis).
struct BasisView {
  const double* T;
  int len;     // knots
  int degree;  // d
  int dim;     // len - degree - 1

  int find_span(double t) const {
    if (t >= T[dim]) return dim - 1;  // right boundary folds into last span
    const double* it = std::upper_bound(T, T + len, t);
    int i = static_cast<int>(it - T) - 1;
    return std::clamp(i, degree, dim - 1);
  }

  // All degree+1 possibly-nonzero basis values at t; first index span-degree.
  void basis_funs(int span, double t, double* N) const {
    N[0] = 1.0;
    std::vector<double> left(static_cast<size_t>(degree) + 1);
    std::vector<double> right(static_cast<size_t>(degree) + 1);
    for (int j = 1; j <= degree; ++j) {
      left[static_cast<size_t>(j)] = t - T[span + 1 - j];
      right[static_cast<size_t>(j)] = T[span + j] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        double tmp = N[r] / (right[static_cast<size_t>(r + 1)] + left[static_cast<size_t>(j - r)]);
        N[r] = saved + right[static_cast<size_t>(r + 1)] * tmp;
        saved = left[static_cast<size_t>(j - r)] * tmp;
      }
      N[j] = saved;
    }
  }

  Eigen::VectorXd row(double t) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    const int span = find_span(t);
    std::vector<double> N(static_cast<size_t>(degree) + 1);
    basis_funs(span, t, N.data());
    for (int r = 0; r <= degree; ++r) out[span - degree + r] = N[static_cast<size_t>(r)];
    return out;
  }
};

}  // namespace

SplineBasis::SplineBasis(double lo, double hi, std::vector<double> interior_knots, int degree)
    : lo_(lo), hi_(hi), degree_(degree), interior_(std::move(interior_knots)) {
  if (!(lo < hi)) throw std::invalid_argument("spline: need lo < hi");
  if (degree < 0) throw std::invalid_argument("spline: degree must be >= 0");
  for (size_t i = 0; i < interior_.size(); ++i) {
    if (!(interior_[i] > lo && interior_[i] < hi))
      throw std::invalid_argument("spline: interior knots must lie strictly inside (lo, hi)");
    if (i > 0 && !(interior_[i] > interior_[i - 1]))
      throw std::invalid_argument("spline: interior knots must be strictly increasing");
  }
  dim_ = static_cast<int>(interior_.size()) + degree_ + 1;
  knots_.reserve(static_cast<size_t>(dim_ + degree_ + 1));
  for (int i = 0; i <= degree_; ++i) knots_.push_back(lo_);
  for (double k : interior_) knots_.push_back(k);
  for (int i = 0; i <= degree_; ++i) knots_.push_back(hi_);
}

void SplineBasis::check_domain(double t) const {
  if (!(t >= lo_ && t <= hi_))
    throw DomainError("spline evaluated at " + std::to_string(t) + " outside [" +
                          std::to_string(lo_) + ", " + std::to_string(hi_) + "]",
                      -1, -1);
}

int SplineBasis::find_span(double t) const {
  BasisView v{knots_.data(), static_cast<int>(knots_.size()), degree_, dim_};
  return v.find_span(t);
}

Eigen::VectorXd SplineBasis::eval(double t) const {
  check_domain(t);
  BasisView v{knots_.data(), static_cast<int>(knots_.size()), degree_, dim_};
  return v.row(t);
}

Eigen::MatrixXd SplineBasis::design(const Eigen::VectorXd& t) const {
  Eigen::MatrixXd X(t.size(), dim_);
  for (int i = 0; i < t.size(); ++i) X.row(i) = eval(t[i]).transpose();
  return X;
}

Eigen::MatrixXd SplineBasis::derivative_map(int order) const {
  if (order < 0 || order > degree_)
    throw std::invalid_argument("derivative_map: order must be in [0, degree]");
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(dim_, dim_);
  for (int l = 0; l < order; ++l) {
    const int d = degree_ - l;   // degree before this differentiation
    const int m = dim_ - l;      // coefficients before this differentiation
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m - 1, m);
    for (int j = 0; j < m - 1; ++j) {
      // knot vector at this level is knots_[l .. end-l]
      const double denom = knots_[static_cast<size_t>(l + j + d + 1)] -
                           knots_[static_cast<size_t>(l + j + 1)];
      D(j, j) = -d / denom;
      D(j, j + 1) = d / denom;
    }
    M = D * M;
  }
  return M;
}

Eigen::VectorXd SplineBasis::eval_derivative(double t, int order) const {
  check_domain(t);
  if (order == 0) return eval(t);
  if (order > degree_) return Eigen::VectorXd::Zero(dim_);
  BasisView v{knots_.data() + order, static_cast<int>(knots_.size()) - 2 * order,
              degree_ - order, dim_ - order};
  return v.row(t).transpose() * derivative_map(order);
}

Eigen::VectorXd SplineBasis::average_integral_row(double a0, double a1) const {
  check_domain(a0);
  check_domain(a1);
  if (!(a0 <= a1)) throw std::invalid_argument("average_integral_row: need a0 <= a1");
  if (a0 == a1) return eval(a0);

  // Antiderivative is a degree+1 spline over the knot vector with one more
  // boundary repeat on each side; its coefficients are cumulative sums of
  // c_i * (t_{i+degree+1} - t_i) / (degree + 1).
  std::vector<double> ext;
  ext.reserve(knots_.size() + 2);
  ext.push_back(lo_);
  ext.insert(ext.end(), knots_.begin(), knots_.end());
  ext.push_back(hi_);

  Eigen::MatrixXd anti = Eigen::MatrixXd::Zero(dim_ + 1, dim_);
  for (int j = 1; j <= dim_; ++j) {
    anti.row(j) = anti.row(j - 1);
    anti(j, j - 1) = (knots_[static_cast<size_t>(j - 1 + degree_ + 1)] -
                      knots_[static_cast<size_t>(j - 1)]) /
                     static_cast<double>(degree_ + 1);
  }

  BasisView v{ext.data(), static_cast<int>(ext.size()), degree_ + 1, dim_ + 1};
  Eigen::VectorXd diff = (v.row(a1) - v.row(a0)).transpose() * anti;
  return diff / (a1 - a0);
}

LinearConstraintSet shape_constraints(const SplineBasis& basis,
                                      const std::vector<ShapeKind>& shapes) {
  const int dim = basis.dim();
  LinearConstraintSet out = LinearConstraintSet::empty(dim);

  auto second_derivative_rows = [&]() {
    if (basis.degree() < 2) throw SpecError("curvature shapes need degree >= 2");
    return basis.derivative_map(2);
  };

  for (ShapeKind s : shapes) {
    switch (s) {
      case ShapeKind::MonotoneIncreasing:
      case ShapeKind::MonotoneDecreasing: {
        // Adjacent coefficient differences; increasing means c_j - c_{j+1} <= 0.
        const double sgn = (s == ShapeKind::MonotoneIncreasing) ? 1.0 : -1.0;
        LinearConstraintSet m{Eigen::MatrixXd::Zero(dim - 1, dim),
                              Eigen::VectorXd::Zero(dim - 1)};
        for (int j = 0; j < dim - 1; ++j) {
          m.C(j, j) = sgn;
          m.C(j, j + 1) = -sgn;
        }
        out.append(m);
        break;
      }
      case ShapeKind::Convex:
      case ShapeKind::Concave: {
        const Eigen::MatrixXd D2 = second_derivative_rows();
        const double sgn = (s == ShapeKind::Concave) ? 1.0 : -1.0;
        LinearConstraintSet m{sgn * D2, Eigen::VectorXd::Zero(D2.rows())};
        out.append(m);
        break;
      }
      case ShapeKind::LinearTailLeft:
      case ShapeKind::LinearTailRight: {
        const Eigen::MatrixXd D2 = second_derivative_rows();
        const int d2 = basis.degree() - 2;        // degree of the 2nd derivative
        const int dim2 = dim - 2;                 // its coefficient count
        int first, last;
        if (s == ShapeKind::LinearTailLeft) {
          first = 0;
          last = std::min(d2, dim2 - 1);
        } else {
          first = std::max(0, dim2 - 1 - d2);
          last = dim2 - 1;
        }
        // Coefficients supported on the boundary segment, forced to zero as
        // paired inequalities.
        const int q = last - first + 1;
        LinearConstraintSet m{Eigen::MatrixXd::Zero(2 * q, dim),
                              Eigen::VectorXd::Zero(2 * q)};
        for (int j = 0; j < q; ++j) {
          m.C.row(2 * j) = D2.row(first + j);
          m.C.row(2 * j + 1) = -D2.row(first + j);
        }
        out.append(m);
        break;
      }
    }
  }
  return out;
}

GaussianPrior highest_derivative_prior(const SplineBasis& basis, double sd) {
  if (!(sd > 0)) throw std::invalid_argument("highest_derivative_prior: sd must be > 0");
  GaussianPrior p;
  p.A = basis.derivative_map(basis.degree());
  p.mean = Eigen::VectorXd::Zero(p.A.rows());
  p.sd = Eigen::VectorXd::Constant(p.A.rows(), sd);
  return p;
}

std::vector<double> quantile_knots(Eigen::VectorXd values, const std::vector<double>& probs) {
  if (values.size() == 0) throw std::invalid_argument("quantile_knots: no values");
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(probs.size());
  for (double p : probs) {
    double q = quantile_type7(sorted, p);
    if (out.empty() || q > out.back()) out.push_back(q);
  }
  return out;
}

}  // namespace trimfit
