#include "trimfit/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "trimfit/capped_simplex.hpp"
#include "trimfit/errors.hpp"

namespace trimfit {

std::vector<int> classify_outliers(const Eigen::VectorXd& w, double threshold) {
  std::vector<int> out;
  for (int j = 0; j < w.size(); ++j)
    if (w[j] < threshold) out.push_back(j);
  return out;
}

namespace {

void finish(FitResult& res, const MEDataset& data, const ModelSpec& spec) {
  res.outliers.clear();
  for (int j : classify_outliers(res.weights.w))
    res.outliers.push_back(data.locate(j));
  res.boundary_rows.clear();
  for (int j = 0; j < res.weights.w.size(); ++j) {
    const double wj = res.weights.w[j];
    if (wj > 0.01 && wj < 0.99) res.boundary_rows.push_back(j);
  }
  res.wellposedness = check_wellposedness(res.theta, data, spec);
}

}  // namespace

FitResult fit_trimmed(const MEDataset& data, const ModelSpec& spec,
                      const std::optional<Eigen::VectorXd>& w0) {
  {
    const std::vector<std::string> findings = validate_spec(spec, data);
    if (!findings.empty()) {
      std::ostringstream os;
      for (size_t i = 0; i < findings.size(); ++i) os << (i ? "; " : "") << findings[i];
      throw ValidationError(os.str());
    }
  }

  const int n = data.n_total();
  const int h = trim_count(spec.inlier_fraction, n);
  const SolverOptions& so = spec.solver;

  FitResult res;
  res.weights.h = static_cast<double>(h);

  if (h == n) {
    res.weights.w = Eigen::VectorXd::Ones(n);
    ValueFunctionResult vr = value_function(res.weights, data, spec);
    res.theta = std::move(vr.theta);
    res.objective = vr.v;
    res.inner = std::move(vr.report);
    res.converged = res.inner.status == SolveStatus::Converged;
    res.stop_reason = "no trimming requested";
    res.search_objectives.push_back(res.objective);
    finish(res, data, spec);
    return res;
  }

  TrimWeights wts;
  wts.h = static_cast<double>(h);
  if (w0) {
    if (w0->size() != n) throw ValidationError("w0 length does not match the dataset");
    wts.w = project_capped_simplex(*w0, static_cast<double>(h));
  } else {
    wts.w = Eigen::VectorXd::Constant(n, static_cast<double>(h) / n);
  }

  ValueFunctionResult cur = value_function(wts, data, spec);
  res.search_objectives.push_back(cur.v);

  // Concentration probe: keep the h rows that are cheapest to retain under
  // the current fit, drop the rest, and accept the vertex only if v strictly
  // decreases. Strict decrease over a finite vertex set rules out cycling,
  // and an already-optimal vertex ranks itself first, so fixed points stay
  // fixed.
  auto probe_vertex = [&]() {
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return cur.row_cost[a] < cur.row_cost[b]; });
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < h; ++j) v[idx[static_cast<size_t>(j)]] = 1.0;
    return v;
  };
  auto try_probe = [&]() -> bool {
    const Eigen::VectorXd w_v = probe_vertex();
    if ((w_v - wts.w).lpNorm<Eigen::Infinity>() <= 1e-15) return false;
    TrimWeights trial{w_v, static_cast<double>(h)};
    ValueFunctionResult vr = value_function(trial, data, spec, cur.theta);
    if (vr.v < cur.v - 1e-10 * std::max(1.0, std::abs(cur.v))) {
      wts.w = w_v;
      cur = std::move(vr);
      res.search_objectives.push_back(cur.v);
      return true;
    }
    return false;
  };

  // Settle onto a vertex before taking gradient steps; the interior start
  // gives the ranking, the probes give the combinatorial moves.
  while (try_probe()) {
  }

  bool outer_converged = false;
  int it = 0;
  for (; it < so.max_outer; ++it) {
    // Stationarity on the projected arc at unit step: if projecting the full
    // gradient step returns w itself, w satisfies the first-order conditions.
    const Eigen::VectorXd at_unit =
        project_capped_simplex(wts.w - cur.grad_w, static_cast<double>(h));
    if ((at_unit - wts.w).lpNorm<Eigen::Infinity>() <= so.w_tol) {
      if (try_probe()) continue;
      outer_converged = true;
      res.stop_reason = "stationary point of the outer objective";
      break;
    }

    double alpha = 1.0;
    bool accepted = false;
    bool small_step = false;
    while (alpha >= so.alpha_min) {
      const Eigen::VectorXd w_try =
          project_capped_simplex(wts.w - alpha * cur.grad_w, static_cast<double>(h));
      const Eigen::VectorXd dw = w_try - wts.w;
      const double pred = cur.grad_w.dot(dw);  // <= 0 by projection
      if (dw.lpNorm<Eigen::Infinity>() <= 1e-15) break;

      TrimWeights trial{w_try, static_cast<double>(h)};
      ValueFunctionResult vr = value_function(trial, data, spec, cur.theta);
      if (vr.v <= cur.v + so.armijo_c * pred) {
        small_step = dw.lpNorm<Eigen::Infinity>() <= so.w_tol;
        wts.w = w_try;
        cur = std::move(vr);
        res.search_objectives.push_back(cur.v);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }

    if (!accepted) {
      if (try_probe()) continue;
      outer_converged = true;
      res.stop_reason = "no descent along the projected gradient";
      break;
    }
    if (small_step) {
      if (try_probe()) continue;
      ++it;
      outer_converged = true;
      res.stop_reason = "weight update below tolerance";
      break;
    }
  }
  if (!outer_converged) res.stop_reason = "outer iteration limit";
  res.outer_iterations = it;

  res.theta = std::move(cur.theta);
  res.objective = cur.v;
  res.inner = std::move(cur.report);
  res.weights = std::move(wts);
  res.converged = outer_converged && res.inner.status == SolveStatus::Converged;

  finish(res, data, spec);
  return res;
}

}  // namespace trimfit
