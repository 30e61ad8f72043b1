#include "trimfit/inner_solver.hpp"

#include <cmath>
#include <sstream>

#include "trimfit/errors.hpp"

namespace trimfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string dump(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << x.transpose();
  return os.str();
}

// Unified inequality list g(x) <= 0 over bounds, linear rows and nonlinear
// rows, in that order.
struct ConstraintSystem {
  const Bounds* bounds = nullptr;
  const LinearConstraintSet* lin = nullptr;
  const std::vector<NonlinearConstraint>* nonlin = nullptr;
  std::vector<int> lo_idx, hi_idx;
  int n_lin = 0, n_nonlin = 0;

  ConstraintSystem(const Bounds& b, const LinearConstraintSet& l,
                   const std::vector<NonlinearConstraint>& nl)
      : bounds(&b), lin(&l), nonlin(&nl) {
    for (int j = 0; j < b.lo.size(); ++j)
      if (std::isfinite(b.lo[j])) lo_idx.push_back(j);
    for (int j = 0; j < b.hi.size(); ++j)
      if (std::isfinite(b.hi[j])) hi_idx.push_back(j);
    n_lin = l.rows();
    for (const NonlinearConstraint& c : nl) n_nonlin += static_cast<int>(c.upper.size());
  }

  int total() const {
    return static_cast<int>(lo_idx.size() + hi_idx.size()) + n_lin + n_nonlin;
  }

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(total());
    int at = 0;
    for (int j : lo_idx) g[at++] = bounds->lo[j] - x[j];
    for (int j : hi_idx) g[at++] = x[j] - bounds->hi[j];
    if (n_lin > 0) {
      g.segment(at, n_lin) = lin->C * x - lin->c;
      at += n_lin;
    }
    for (const NonlinearConstraint& c : *nonlin) {
      const Eigen::VectorXd v = c.evaluator(x) - c.upper;
      g.segment(at, v.size()) = v;
      at += static_cast<int>(v.size());
    }
    return g;
  }

  // out += sum_i coef_i * grad g_i(x)
  void add_weighted_grads(const Eigen::VectorXd& x, const Eigen::VectorXd& coef,
                          Eigen::VectorXd& out) const {
    int at = 0;
    for (int j : lo_idx) out[j] -= coef[at++];
    for (int j : hi_idx) out[j] += coef[at++];
    if (n_lin > 0) {
      out.noalias() += lin->C.transpose() * coef.segment(at, n_lin);
      at += n_lin;
    }
    for (const NonlinearConstraint& c : *nonlin) {
      const Eigen::MatrixXd J = c.jacobian(x);
      out.noalias() += J.transpose() * coef.segment(at, J.rows());
      at += static_cast<int>(J.rows());
    }
  }

  // H += mu * sum_i grad g_i grad g_i^T / slack_i^2, the exact barrier
  // Hessian for bounds and linear rows (Gauss-Newton part for nonlinear
  // rows). This term carries all the 1/mu ill-conditioning, so modelling it
  // exactly lets the quasi-Newton part track only the smooth objective.
  void add_barrier_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double mu,
                           Eigen::MatrixXd& H) const {
    int at = 0;
    for (int j : lo_idx) {
      H(j, j) += mu / (g[at] * g[at]);
      ++at;
    }
    for (int j : hi_idx) {
      H(j, j) += mu / (g[at] * g[at]);
      ++at;
    }
    for (int i = 0; i < n_lin; ++i) {
      const double s = g[at + i];
      H.noalias() += (mu / (s * s)) * (lin->C.row(i).transpose() * lin->C.row(i));
    }
    at += n_lin;
    for (const NonlinearConstraint& c : *nonlin) {
      const Eigen::MatrixXd J = c.jacobian(x);
      for (int i = 0; i < J.rows(); ++i) {
        const double s = g[at + i];
        H.noalias() += (mu / (s * s)) * (J.row(i).transpose() * J.row(i));
      }
      at += static_cast<int>(J.rows());
    }
  }

  // Largest step along d keeping bounds and linear rows strictly inside;
  // nonlinear rows are handled by rejection in the line search.
  double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d) const {
    double amax = kInf;
    for (int j : lo_idx)
      if (d[j] < 0.0) amax = std::min(amax, (bounds->lo[j] - x[j]) / d[j]);
    for (int j : hi_idx)
      if (d[j] > 0.0) amax = std::min(amax, (bounds->hi[j] - x[j]) / d[j]);
    if (n_lin > 0) {
      const Eigen::VectorXd slack = lin->c - lin->C * x;  // > 0 inside
      const Eigen::VectorXd cd = lin->C * d;
      for (int i = 0; i < cd.size(); ++i)
        if (cd[i] > 0.0) amax = std::min(amax, slack[i] / cd[i]);
    }
    return amax;
  }
};

struct BarrierOpts {
  double kkt_tol = 1e-6;
  int max_iterations = 400;
  double mu0 = 1.0;
  double factor = 10.0;
  double mu_min = 1e-9;
};

// Minimizes f - mu * sum ln(-g) over the strict interior for the barrier
// schedule; fills the KKT fields of the report. early_stop, when set, is
// checked at accepted iterates (used by phase-1).
SolveReport barrier_minimize(const Oracle& f, const ConstraintSystem& cs,
                             const Eigen::VectorXd& x0, const BarrierOpts& opts,
                             const std::function<bool(const Eigen::VectorXd&)>& early_stop) {
  SolveReport rep;
  const int dim = static_cast<int>(x0.size());
  const int m = cs.total();

  Eigen::VectorXd x = x0;
  {
    const Eigen::VectorXd g = cs.eval(x);
    if (m > 0 && g.maxCoeff() >= 0.0)
      throw NumericError("barrier_minimize: start is not strictly interior");
  }

  auto barrier_value = [&](const Eigen::VectorXd& xx, double mu, double fx) -> double {
    if (!std::isfinite(fx)) return kInf;
    if (m == 0) return fx;
    const Eigen::VectorXd g = cs.eval(xx);
    double b = 0.0;
    for (int i = 0; i < m; ++i) {
      if (g[i] >= 0.0) return kInf;
      b -= std::log(-g[i]);
    }
    return fx + mu * b;
  };

  std::vector<double> mus;
  if (m == 0) {
    mus.push_back(0.0);
  } else {
    for (double mu = opts.mu0; mu >= opts.mu_min * (1.0 - 1e-12); mu /= opts.factor)
      mus.push_back(mu);
  }

  Eigen::VectorXd grad_f(dim);
  double fx = f(x, &grad_f);
  ++rep.evaluations;
  if (!std::isfinite(fx))
    throw NumericError("objective not finite at the starting point; x = " + dump(x));

  // Quasi-Newton model of f alone; the barrier curvature is added exactly at
  // every step, so B never has to learn the 1/mu stiffness and can persist
  // across barrier stages.
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(dim, dim);
  bool have_curvature = false;

  for (double mu : mus) {
    const double stage_tol = std::max(mu, 0.5 * opts.kkt_tol);

    // barrier gradient at current x
    auto barrier_grad = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& gf) {
      Eigen::VectorXd out = gf;
      if (m > 0) {
        const Eigen::VectorXd g = cs.eval(xx);
        cs.add_weighted_grads(xx, (mu * (-g.array()).inverse()).matrix(), out);
      }
      return out;
    };

    Eigen::VectorXd gb = barrier_grad(x, grad_f);
    double phi = barrier_value(x, mu, fx);

    const char* dbg = std::getenv("TRIMFIT_DEBUG_BARRIER");
    int stage_iters = 0;
    const char* exit_why = "tol";

    for (int it = 0; it < opts.max_iterations; ++it) {
      if (gb.lpNorm<Eigen::Infinity>() <= stage_tol) break;
      ++rep.iterations;
      ++stage_iters;
      exit_why = "max_it";

      Eigen::MatrixXd H = B;
      if (m > 0) cs.add_barrier_hessian(x, cs.eval(x), mu, H);

      // Newton direction with a ridge fallback when the model is indefinite.
      Eigen::VectorXd d;
      double descent = 0.0;
      double tau = 0.0;
      for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::MatrixXd Ht = H;
        if (tau > 0.0) Ht.diagonal().array() += tau;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(Ht);
        if (ldlt.info() == Eigen::Success) {
          d = -ldlt.solve(gb);
          descent = gb.dot(d);
          if (descent < 0.0 && d.allFinite()) break;
        }
        tau = tau == 0.0 ? 1e-8 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()) : 10.0 * tau;
        d.setZero();
      }
      if (!(descent < 0.0)) {
        d = -gb;
        descent = gb.dot(d);
      }

      const double amax = cs.max_step(x, d);
      double alpha = std::min(1.0, 0.99 * amax);
      const double dnorm = d.norm();
      const double alpha_floor = 1e-14 * std::max(1.0, x.norm()) / std::max(dnorm, 1e-300);

      bool accepted = false;
      Eigen::VectorXd x_try;
      while (alpha > alpha_floor) {
        x_try = x + alpha * d;
        const double f_try = f(x_try, nullptr);
        ++rep.evaluations;
        const double phi_try = barrier_value(x_try, mu, f_try);
        if (phi_try <= phi + 1e-4 * alpha * descent) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // Near a stage optimum the Armijo decrease can fall below the
        // rounding noise of phi, so no step verifies even though Newton
        // contraction is still available. In that sub-noise regime accept on
        // strict barrier-gradient descent instead; away from it the
        // sufficient-decrease rule stays in charge.
        const double phi_noise = 1e-12 * std::max(1.0, std::abs(phi));
        const double alpha1 = std::min(1.0, 0.99 * amax);
        if (alpha1 > alpha_floor && std::abs(1e-4 * alpha1 * descent) <= phi_noise) {
          x_try = x + alpha1 * d;
          Eigen::VectorXd grad_try(dim);
          const double f_try = f(x_try, &grad_try);
          ++rep.evaluations;
          const double phi_try = barrier_value(x_try, mu, f_try);
          if (std::isfinite(phi_try) && phi_try <= phi + phi_noise &&
              barrier_grad(x_try, grad_try).lpNorm<Eigen::Infinity>() <
                  0.9999 * gb.lpNorm<Eigen::Infinity>())
            accepted = true;
        }
      }
      if (!accepted) break;

      Eigen::VectorXd grad_new(dim);
      const double f_new = f(x_try, &grad_new);
      ++rep.evaluations;
      if (!std::isfinite(f_new))
        throw NumericError("objective became non-finite at an accepted iterate; x = " +
                           dump(x_try));

      // damped BFGS on f's own curvature pair
      const Eigen::VectorXd s = x_try - x;
      Eigen::VectorXd yv = grad_new - grad_f;
      const double sBs = s.dot(B * s);
      double sy = s.dot(yv);
      if (sy < 0.2 * sBs && sBs > 0.0) {  // Powell damping keeps B positive definite
        const double theta = 0.8 * sBs / (sBs - sy);
        yv = theta * yv + (1.0 - theta) * (B * s);
        sy = s.dot(yv);
      }
      if (sy > 1e-12 * s.norm() * yv.norm() && sy > 0.0) {
        if (!have_curvature) {
          B = (yv.squaredNorm() / sy) * Eigen::MatrixXd::Identity(dim, dim);
          have_curvature = true;
        }
        const Eigen::VectorXd Bs = B * s;
        B.noalias() += (yv * yv.transpose()) / sy;
        B.noalias() -= (Bs * Bs.transpose()) / s.dot(Bs);
      }

      x = x_try;
      fx = f_new;
      grad_f = grad_new;
      gb = barrier_grad(x, grad_f);
      phi = barrier_value(x, mu, fx);

      if (early_stop && early_stop(x)) {
        rep.x = x;
        rep.objective = fx;
        rep.status = SolveStatus::Converged;
        return rep;
      }
    }
    rep.stage_objectives.push_back(fx);
  }

  rep.x = x;
  rep.objective = fx;

  // KKT at exit: multiplier estimates mu_min / (-g_i), then a least-squares
  // refinement over the near-active rows. The centered estimates carry an
  // O(mu) stationarity bias that the last stages cannot always polish away
  // once barrier decreases fall below rounding noise in phi; the refined
  // multipliers measure the distance to the KKT point at the iterate itself.
  // Whichever set scores the smaller residual is reported.
  const double mu_last = mus.back();
  if (m > 0) {
    const Eigen::VectorXd g = cs.eval(x);
    rep.kkt_feasibility = std::max(0.0, g.maxCoeff());
    for (int i = 0; i < m; ++i)
      if (-g[i] <= 1e-6) rep.active_set.push_back(i);

    Eigen::VectorXd mult(m);
    for (int i = 0; i < m; ++i) mult[i] = mu_last / std::max(-g[i], 1e-300);
    auto score = [&](const Eigen::VectorXd& lam) {
      Eigen::VectorXd lagr = grad_f;
      cs.add_weighted_grads(x, lam, lagr);
      const double stat = lagr.lpNorm<Eigen::Infinity>();
      const double comp = (lam.array() * g.array()).abs().maxCoeff();
      return std::make_pair(stat, comp);
    };
    auto [stat, comp] = score(mult);

    if (!rep.active_set.empty()) {
      const int na = static_cast<int>(rep.active_set.size());
      Eigen::MatrixXd G(dim, na);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
      for (int k = 0; k < na; ++k) {
        e[rep.active_set[k]] = 1.0;
        Eigen::VectorXd col = Eigen::VectorXd::Zero(dim);
        cs.add_weighted_grads(x, e, col);
        G.col(k) = col;
        e[rep.active_set[k]] = 0.0;
      }
      Eigen::MatrixXd gram = G.transpose() * G;
      gram.diagonal().array() += 1e-12 * std::max(1.0, gram.diagonal().maxCoeff());
      const Eigen::VectorXd lam_ls =
          gram.ldlt().solve(-G.transpose() * grad_f).cwiseMax(0.0);
      Eigen::VectorXd refined = mult;
      for (int k = 0; k < na; ++k) refined[rep.active_set[k]] = lam_ls[k];
      const auto [stat2, comp2] = score(refined);
      if (std::max(stat2, comp2) < std::max(stat, comp)) {
        mult = refined;
        stat = stat2;
        comp = comp2;
      }
    }

    rep.multipliers = mult;
    rep.kkt_stationarity = stat;
    rep.kkt_complementarity = comp;
  } else {
    rep.multipliers.resize(0);
    rep.kkt_stationarity = grad_f.lpNorm<Eigen::Infinity>();
    rep.kkt_feasibility = 0.0;
    rep.kkt_complementarity = 0.0;
  }

  rep.status = (rep.kkt_residual() <= opts.kkt_tol) ? SolveStatus::Converged
                                                    : SolveStatus::MaxIterations;
  return rep;
}

// Clamp x into the strict interior of the box: 1e-6 of the range (or of 1
// for one-sided bounds).
Eigen::VectorXd clamp_into_box(const Eigen::VectorXd& x0, const Bounds& b) {
  Eigen::VectorXd x = x0;
  for (int j = 0; j < x.size(); ++j) {
    const bool flo = std::isfinite(b.lo[j]);
    const bool fhi = std::isfinite(b.hi[j]);
    double margin = 1e-6;
    if (flo && fhi) margin = 1e-6 * std::max(b.hi[j] - b.lo[j], 1e-30);
    if (flo && fhi && b.hi[j] - b.lo[j] < 2 * margin) {
      x[j] = 0.5 * (b.lo[j] + b.hi[j]);
      continue;
    }
    if (flo && x[j] < b.lo[j] + margin) x[j] = b.lo[j] + margin;
    if (fhi && x[j] > b.hi[j] - margin) x[j] = b.hi[j] - margin;
  }
  return x;
}

}  // namespace

SolveReport minimize_constrained(const Oracle& f, const Bounds& bounds,
                                 const LinearConstraintSet& lin,
                                 const std::vector<NonlinearConstraint>& nonlin,
                                 const Eigen::VectorXd& x0, const SolverOptions& opts) {
  const int dim = static_cast<int>(x0.size());
  if (bounds.lo.size() != dim || bounds.hi.size() != dim)
    throw ValidationError("bounds do not match the variable count");
  if (lin.rows() > 0 && lin.width() != dim)
    throw ValidationError("linear constraints do not match the variable count");
  for (int j = 0; j < dim; ++j)
    if (!std::isfinite(x0[j])) throw NumericError("starting point is not finite");

  BarrierOpts bo;
  bo.kkt_tol = opts.kkt_tol;
  bo.max_iterations = opts.max_iterations;
  bo.mu0 = opts.barrier_initial;
  bo.factor = opts.barrier_factor;
  bo.mu_min = opts.barrier_min;

  Eigen::VectorXd x = clamp_into_box(x0, bounds);

  // Presolve: exactly opposing row pairs encode an equality, and an equality
  // leaves the feasible set without a strict interior for the barrier to work
  // in. Widening each such row by a small band restores one; the solution
  // then meets the equality to within the band, far inside kkt_tol-scale
  // feasibility. Pairs whose offsets do not cancel are left alone (those are
  // either plain inequalities or genuinely contradictory).
  LinearConstraintSet rows = lin;
  if (rows.rows() > 1) {
    const Eigen::MatrixXd C0 = rows.C;
    const Eigen::VectorXd c0 = rows.c;
    for (int i = 0; i < C0.rows(); ++i) {
      const double rscale = std::max(1.0, C0.row(i).lpNorm<Eigen::Infinity>());
      const double cscale = std::max(1.0, std::abs(c0[i]));
      for (int j = i + 1; j < C0.rows(); ++j) {
        if ((C0.row(i) + C0.row(j)).lpNorm<Eigen::Infinity>() <= 1e-12 * rscale &&
            std::abs(c0[i] + c0[j]) <= 1e-12 * cscale) {
          const double band = 1e-7 * cscale;
          rows.c[i] = std::max(rows.c[i], c0[i] + band);
          rows.c[j] = std::max(rows.c[j], c0[j] + band);
        }
      }
    }
  }

  ConstraintSystem cs(bounds, rows, nonlin);

  // Phase-1 when rows beyond the box are violated (the box itself was just
  // clamped): minimize s subject to g_i(x) <= s until s is safely negative.
  auto row_violation = [&](const Eigen::VectorXd& xx) -> double {
    double worst = -kInf;
    if (rows.rows() > 0) worst = std::max(worst, (rows.C * xx - rows.c).maxCoeff());
    for (const NonlinearConstraint& c : nonlin)
      worst = std::max(worst, (c.evaluator(xx) - c.upper).maxCoeff());
    return worst;
  };

  const bool has_rows = rows.rows() > 0 || !nonlin.empty();
  if (has_rows && row_violation(x) >= 0.0) {
    // Augmented variables (x, s).
    const int adim = dim + 1;
    Bounds ab;
    ab.lo = Eigen::VectorXd::Constant(adim, -kInf);
    ab.hi = Eigen::VectorXd::Constant(adim, kInf);
    ab.lo.head(dim) = bounds.lo;
    ab.hi.head(dim) = bounds.hi;

    LinearConstraintSet alin = LinearConstraintSet::empty(adim);
    if (rows.rows() > 0) {
      alin.C = Eigen::MatrixXd::Zero(rows.rows(), adim);
      alin.C.leftCols(dim) = rows.C;
      alin.C.col(dim).setConstant(-1.0);
      alin.c = rows.c;
    }
    std::vector<NonlinearConstraint> anonlin;
    for (const NonlinearConstraint& c : nonlin) {
      NonlinearConstraint acn;
      acn.upper = c.upper;
      acn.evaluator = [&c, dim](const Eigen::VectorXd& xs) {
        return (c.evaluator(xs.head(dim)).array() - xs[dim]).matrix().eval();
      };
      acn.jacobian = [&c, dim](const Eigen::VectorXd& xs) {
        const Eigen::MatrixXd J = c.jacobian(xs.head(dim));
        Eigen::MatrixXd aj(J.rows(), dim + 1);
        aj.leftCols(dim) = J;
        aj.col(dim).setConstant(-1.0);
        return aj;
      };
      anonlin.push_back(std::move(acn));
    }

    Eigen::VectorXd ax(adim);
    ax.head(dim) = x;
    ax[dim] = row_violation(x) + 1.0;

    const Oracle phase1 = [dim](const Eigen::VectorXd& xs, Eigen::VectorXd* grad) {
      if (grad) {
        grad->setZero(xs.size());
        (*grad)[dim] = 1.0;
      }
      return xs[dim];
    };
    ConstraintSystem acs(ab, alin, anonlin);
    BarrierOpts p1 = bo;
    p1.kkt_tol = 1e-8;
    SolveReport prep = barrier_minimize(
        phase1, acs, ax, p1, [dim](const Eigen::VectorXd& xs) { return xs[dim] < -1e-6; });
    if (prep.x[dim] >= 0.0) {
      SolveReport rep;
      rep.x = prep.x.head(dim);
      rep.objective = f(rep.x, nullptr);
      rep.status = SolveStatus::Infeasible;
      return rep;
    }
    x = prep.x.head(dim);
  }

  return barrier_minimize(f, cs, x, bo, nullptr);
}

Theta default_theta0(const MEDataset& data, const ModelSpec& spec) {
  if (spec.theta0) return *spec.theta0;

  const ParamLayout layout = ParamLayout::infer(data, spec);
  Theta t;

  if (const auto* linm = std::get_if<LinearObs>(&spec.model)) {
    Eigen::MatrixXd X(data.n_total(), layout.k_beta());
    Eigen::VectorXd y(data.n_total());
    for (int i = 0; i < data.n_groups(); ++i) {
      X.middleRows(data.flat_offset(i), data.group(i).n()) = linm->X[static_cast<size_t>(i)];
      y.segment(data.flat_offset(i), data.group(i).n()) = data.group(i).y;
    }
    t.beta = X.colPivHouseholderQr().solve(y);
  } else {
    // Flat curve: with partition-of-unity design rows this is risk 1
    // everywhere, strictly inside the log domain.
    t.beta = Eigen::VectorXd::Ones(layout.k_beta());
  }

  t.gamma = spec.fixed_gamma ? *spec.fixed_gamma : Eigen::VectorXd::Ones(layout.k_gamma());

  if (layout.k_sigma() > 0) {
    auto resid_sd = [&](int i) {
      const Group& g = data.group(i);
      Eigen::VectorXd r;
      try {
        r = g.y - f_eval(spec.model, t.beta, i);
      } catch (const DomainError&) {
        r = g.y;
      }
      return std::sqrt(r.squaredNorm() / std::max(1, g.n()));
    };
    if (spec.error == ErrorKind::SharedSigma) {
      double ss = 0.0;
      int n = 0;
      for (int i = 0; i < data.n_groups(); ++i) {
        const Group& g = data.group(i);
        Eigen::VectorXd r;
        try {
          r = g.y - f_eval(spec.model, t.beta, i);
        } catch (const DomainError&) {
          r = g.y;
        }
        ss += r.squaredNorm();
        n += g.n();
      }
      t.sigma = Eigen::VectorXd::Constant(1, std::max(std::sqrt(ss / std::max(1, n)), 1e-3));
    } else {
      t.sigma.resize(data.n_groups());
      for (int i = 0; i < data.n_groups(); ++i) t.sigma[i] = std::max(resid_sd(i), 1e-3);
    }
  } else {
    t.sigma.resize(0);
  }
  return t;
}

ValueFunctionResult value_function(const TrimWeights& weights, const MEDataset& data,
                                   const ModelSpec& spec, const std::optional<Theta>& warm) {
  const ParamLayout layout = ParamLayout::infer(data, spec);

  const Theta start = warm ? *warm : default_theta0(data, spec);
  Eigen::VectorXd x0 = layout.free_of_full(layout.flatten(start));

  const Oracle oracle = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) -> double {
    const Theta th = layout.unflatten(layout.full_of_free(x));
    try {
      ObjectiveValue ov =
          trimmed_neg_loglik(th, weights, data, spec, grad != nullptr, false);
      if (grad) *grad = layout.reduce_grad(ov.grad_theta);
      return ov.value;
    } catch (const DomainError&) {
      return kInf;
    } catch (const NumericError&) {
      return kInf;
    }
  };

  Bounds bounds;
  layout.bounds(bounds.lo, bounds.hi);
  const LinearConstraintSet lin = layout.reduce_linear(spec.constraints);

  std::vector<NonlinearConstraint> nonlin;
  nonlin.reserve(spec.nonlinear.size());
  for (const NonlinearConstraint& c : spec.nonlinear) {
    NonlinearConstraint rc;
    rc.upper = c.upper;
    rc.evaluator = [&c, &layout](const Eigen::VectorXd& x) {
      return c.evaluator(layout.full_of_free(x));
    };
    rc.jacobian = [&c, &layout](const Eigen::VectorXd& x) {
      return layout.reduce_cols(c.jacobian(layout.full_of_free(x)));
    };
    nonlin.push_back(std::move(rc));
  }

  SolveReport rep = minimize_constrained(oracle, bounds, lin, nonlin, x0, spec.solver);
  if (rep.status == SolveStatus::Infeasible)
    throw FitError("constraint set is infeasible");

  ValueFunctionResult out;
  out.theta = layout.unflatten(layout.full_of_free(rep.x));
  ObjectiveValue ov = trimmed_neg_loglik(out.theta, weights, data, spec, false, true);
  out.v = ov.value;
  out.grad_w = std::move(ov.grad_w);
  out.row_cost = std::move(ov.row_cost);
  out.report = std::move(rep);
  return out;
}

}  // namespace trimfit
