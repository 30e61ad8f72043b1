#pragma once

#include <Eigen/Dense>

namespace trimfit {

// Euclidean projection onto {w : sum(w) = h, 0 <= w <= 1}. The projection is
// clip(v + mu, 0, 1) for the shift mu solving sum(clip(v + mu, 0, 1)) = h;
// mu is found exactly by sorting the 2n breakpoints {-v_j, 1 - v_j} and
// scanning the piecewise-linear sum. O(n log n), no iteration tolerance.
// Throws std::invalid_argument when h is outside [0, n].
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double h);

}  // namespace trimfit
