#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trimfit/inner_solver.hpp"

namespace trimfit {

// Full output of one trimmed fit. search_objectives tracks the outer
// objective v(w) at each accepted iterate and is non-increasing by
// construction.
struct FitResult {
  Theta theta;
  TrimWeights weights;
  double objective = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int outer_iterations = 0;
  SolveReport inner;  // inner solve at the final weights
  std::vector<std::pair<int, int>> outliers;  // (group, row) with w below 0.5
  std::vector<int> boundary_rows;             // flat indices with w in (0.01, 0.99)
  std::vector<double> search_objectives;
  WellPosednessReport wellposedness;
  std::string stop_reason;
};

// Trimmed fit: alternates inner theta-solves with projected-gradient steps of
// w on the capped simplex sum(w) = h, 0 <= w <= 1, h = trim_count(
// inlier_fraction, n). inlier_fraction = 1 skips the outer loop entirely.
//
// Projected gradient alone cannot cross between the basins the lambda^w
// interpolation creates once lambda exceeds e (the per-row quadratic factor
// w lambda^-w peaks at w = 1/ln lambda, so every binary vertex is first-order
// stationary). The loop therefore interleaves concentration probes: rank the
// rows by retention cost at the current fit, jump to the vertex keeping the
// h cheapest, and accept only on strict descent of v. Probes run from the
// initial interior fit to a vertex fixed point and again whenever the
// gradient step stalls; they preserve the monotone-descent invariant and any
// vertex that is already optimal reproduces itself.
//
// w0 overrides the neutral (h/n) start; it is projected onto the simplex.
FitResult fit_trimmed(const MEDataset& data, const ModelSpec& spec,
                      const std::optional<Eigen::VectorXd>& w0 = std::nullopt);

// Flat indices with w[j] < threshold, ascending.
std::vector<int> classify_outliers(const Eigen::VectorXd& w, double threshold = 0.5);

}  // namespace trimfit
