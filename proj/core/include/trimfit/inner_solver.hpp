#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "trimfit/likelihood.hpp"
#include "trimfit/model_spec.hpp"

namespace trimfit {

enum class SolveStatus { Converged, MaxIterations, Infeasible };

// Result of one constrained minimization. Multipliers and the active set are
// indexed over the unified inequality list: finite lower bounds (variable
// order), finite upper bounds, linear rows, nonlinear rows.
struct SolveReport {
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;    // BFGS iterations, all barrier stages
  int evaluations = 0;   // oracle calls
  double kkt_stationarity = std::numeric_limits<double>::infinity();
  double kkt_feasibility = std::numeric_limits<double>::infinity();
  double kkt_complementarity = std::numeric_limits<double>::infinity();
  Eigen::VectorXd multipliers;
  std::vector<int> active_set;           // constraints with slack <= 1e-6
  std::vector<double> stage_objectives;  // f at each barrier stage's end

  double kkt_residual() const {
    return std::max({kkt_stationarity, kkt_feasibility, kkt_complementarity});
  }
};

// Objective callback: returns f(x) (may be +inf for domain-invalid trial
// points); fills *grad when non-null.
using Oracle = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct Bounds {
  Eigen::VectorXd lo, hi;  // +-inf entries mean unbounded
};

// Primal log-barrier interior point: minimize f subject to bounds,
// C x <= c and nonlinear rows. Each barrier subproblem is minimized with
// damped BFGS and an Armijo line search that never leaves the strict
// interior; the barrier weight runs over opts.barrier_initial down to
// opts.barrier_min (divided by opts.barrier_factor). A strictly infeasible
// start triggers a phase-1 slack minimization; if that fails the report
// carries SolveStatus::Infeasible.
SolveReport minimize_constrained(const Oracle& f, const Bounds& bounds,
                                 const LinearConstraintSet& lin,
                                 const std::vector<NonlinearConstraint>& nonlin,
                                 const Eigen::VectorXd& x0, const SolverOptions& opts);

// Variable-projection value function v(w) = min_theta L(theta, w) under the
// spec's constraints, with grad_w = dL/dw at the minimizer (exact by the
// envelope theorem, since theta-variations vanish to first order at a KKT
// point). warm seeds the inner solve. row_cost carries the per-observation
// retention costs at the minimizer (see ObjectiveValue::row_cost).
struct ValueFunctionResult {
  double v = 0.0;
  Eigen::VectorXd grad_w;
  Eigen::VectorXd row_cost;
  SolveReport report;
  Theta theta;
};

ValueFunctionResult value_function(const TrimWeights& weights, const MEDataset& data,
                                   const ModelSpec& spec,
                                   const std::optional<Theta>& warm = std::nullopt);

// Starting point when the spec does not provide one: least squares for
// linear models, flat curve (all-ones coefficients) for the log models,
// gamma = 1, sigma = residual standard deviation.
Theta default_theta0(const MEDataset& data, const ModelSpec& spec);

}  // namespace trimfit
