// Command line front end: fit models from CSV + JSON config, run the
// synthetic benchmarks, run the parametric bootstrap, validate configs.
// Exit codes: 0 ok, 2 usage/config error, 3 non-convergence, 4 numeric
// failure.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trimfit/bootstrap.hpp"
#include "trimfit/csv.hpp"
#include "trimfit/errors.hpp"
#include "trimfit/rng.hpp"
#include "trimfit/simharness.hpp"
#include "trimfit/splines.hpp"
#include "trimfit/stats.hpp"
#include "trimfit/trimming.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trimfit;

namespace {

// ---- output JSON emitter ----
// All numbers are written with %.17g so identical runs give identical bytes;
// non-finite values become null.

std::string jnum(double v) {
  if (!std::isfinite(v)) return "null";
  return format_g17(v);
}

std::string jstr(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

std::string jarr(const std::vector<std::string>& elems) {
  std::string out = "[";
  for (size_t i = 0; i < elems.size(); ++i) {
    if (i) out += ",";
    out += elems[i];
  }
  out += "]";
  return out;
}

std::string jvec(const Eigen::VectorXd& v) {
  std::vector<std::string> e;
  e.reserve(static_cast<size_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) e.push_back(jnum(v[i]));
  return jarr(e);
}

std::string jobj(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out = "{";
  for (size_t i = 0; i < kv.size(); ++i) {
    if (i) out += ",";
    out += jstr(kv[i].first) + ":" + kv[i].second;
  }
  out += "}";
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

// ---- config ----

struct RunConfig {
  std::string data_path;
  CsvSchema schema;
  ModelSpec spec;
  std::uint64_t seed = 0;
  int curve_points = 101;
  std::optional<SplineBasis> basis;  // set for spline models (drives curve.csv)
};

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
}

// json accessors that convert nlohmann's errors into config errors
template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(where + ": key '" + key + "': " + e.what());
  }
}

template <typename T>
T value_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(where + ": key '" + key + "': " + e.what());
  }
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ShapeKind parse_shape(const std::string& s) {
  if (s == "monotone_increasing") return ShapeKind::MonotoneIncreasing;
  if (s == "monotone_decreasing") return ShapeKind::MonotoneDecreasing;
  if (s == "convex") return ShapeKind::Convex;
  if (s == "concave") return ShapeKind::Concave;
  if (s == "linear_tail_left") return ShapeKind::LinearTailLeft;
  if (s == "linear_tail_right") return ShapeKind::LinearTailRight;
  throw SchemaError("unknown shape '" + s + "'");
}

Eigen::VectorXd column_values(const MEDataset& data, const std::string& name) {
  const int c = data.covariate_index(name);
  Eigen::VectorXd v(data.n_total());
  for (int i = 0; i < data.n_groups(); ++i)
    v.segment(data.flat_offset(i), data.group(i).n()) = data.group(i).covariates.col(c);
  return v;
}

SplineBasis build_basis(const json& sp, const MEDataset& data,
                        const std::vector<std::string>& value_columns) {
  const int degree = value_or<int>(sp, "degree", 3, "model.spline");

  Eigen::VectorXd observed(0);
  for (const std::string& col : value_columns) {
    const Eigen::VectorXd v = column_values(data, col);
    Eigen::VectorXd merged(observed.size() + v.size());
    merged << observed, v;
    observed = std::move(merged);
  }

  double lo, hi;
  if (sp.contains("domain")) {
    const auto dom = require<std::vector<double>>(sp, "domain", "model.spline");
    if (dom.size() != 2) throw SchemaError("model.spline.domain must be [lo, hi]");
    lo = dom[0];
    hi = dom[1];
  } else {
    if (observed.size() == 0) throw SchemaError("model.spline.domain required");
    lo = observed.minCoeff();
    hi = observed.maxCoeff();
  }

  std::vector<double> interior;
  if (sp.contains("interior_knots")) {
    interior = require<std::vector<double>>(sp, "interior_knots", "model.spline");
  } else if (sp.contains("quantile_knots")) {
    const int k = require<int>(sp, "quantile_knots", "model.spline");
    if (k < 0) throw SchemaError("model.spline.quantile_knots must be >= 0");
    std::vector<double> probs;
    for (int i = 1; i <= k; ++i) probs.push_back(static_cast<double>(i) / (k + 1));
    interior = quantile_knots(observed, probs);
    // keep only knots strictly inside the domain
    std::vector<double> kept;
    for (double t : interior)
      if (t > lo && t < hi) kept.push_back(t);
    interior = std::move(kept);
  }
  return SplineBasis(lo, hi, std::move(interior), degree);
}

struct LoadedRun {
  RunConfig cfg;
  MEDataset data;
};

LoadedRun load_run(const std::string& path) {
  const json j = load_json(path);
  RunConfig cfg;

  const json jd = require<json>(j, "data", "config");
  cfg.data_path = require<std::string>(jd, "path", "data");
  // dataset paths are resolved relative to the config file
  if (!cfg.data_path.empty() && !fs::path(cfg.data_path).is_absolute())
    cfg.data_path = (fs::path(path).parent_path() / cfg.data_path).string();
  cfg.schema.group_column = value_or<std::string>(jd, "group_column", "group", "data");
  cfg.schema.y_column = value_or<std::string>(jd, "y_column", "y", "data");
  if (jd.contains("se_column"))
    cfg.schema.se_column = require<std::string>(jd, "se_column", "data");
  cfg.schema.z_columns =
      value_or<std::vector<std::string>>(jd, "random_effect_columns", {}, "data");

  MEDataset data = load_dataset(cfg.data_path, cfg.schema);

  const std::string error =
      value_or<std::string>(j, "error", cfg.schema.se_column ? "known" : "shared_sigma", "config");
  if (error == "known") cfg.spec.error = ErrorKind::Known;
  else if (error == "shared_sigma") cfg.spec.error = ErrorKind::SharedSigma;
  else if (error == "group_sigma") cfg.spec.error = ErrorKind::GroupSigma;
  else throw SchemaError("unknown error kind '" + error + "'");

  const json jm = require<json>(j, "model", "config");
  const std::string type = require<std::string>(jm, "type", "model");

  LinearConstraintSet beta_constraints = LinearConstraintSet::empty(0);

  if (type == "linear") {
    const auto cols = value_or<std::vector<std::string>>(jm, "columns", {}, "model");
    const bool intercept = value_or<bool>(jm, "intercept", true, "model");
    if (!intercept && cols.empty()) throw SchemaError("linear model has no columns");
    LinearObs lin;
    for (int i = 0; i < data.n_groups(); ++i) {
      const Group& g = data.group(i);
      Eigen::MatrixXd X(g.n(), (intercept ? 1 : 0) + static_cast<int>(cols.size()));
      int at = 0;
      if (intercept) X.col(at++).setOnes();
      for (const std::string& c : cols) X.col(at++) = g.covariates.col(data.covariate_index(c));
      lin.X.push_back(std::move(X));
    }
    cfg.spec.model = std::move(lin);
  } else if (type == "log_spline") {
    const std::string exposure = require<std::string>(jm, "exposure_column", "model");
    const json sp = require<json>(jm, "spline", "model");
    cfg.basis = build_basis(sp, data, {exposure});
    cfg.spec.model = log_spline_obs(*cfg.basis, data, exposure);
    if (sp.contains("shapes")) {
      std::vector<ShapeKind> shapes;
      for (const std::string& s : require<std::vector<std::string>>(sp, "shapes", "model.spline"))
        shapes.push_back(parse_shape(s));
      beta_constraints.append(shape_constraints(*cfg.basis, shapes));
    }
    if (sp.contains("anchor_exposure"))
      beta_constraints.append(
          anchor_unit_risk(*cfg.basis, require<double>(sp, "anchor_exposure", "model.spline")));
    if (sp.contains("highest_derivative_prior_sd"))
      cfg.spec.priors.push_back(highest_derivative_prior(
          *cfg.basis, require<double>(sp, "highest_derivative_prior_sd", "model.spline")));
  } else if (type == "log_ratio") {
    const std::string alo = require<std::string>(jm, "alt_lo_column", "model");
    const std::string ahi = require<std::string>(jm, "alt_hi_column", "model");
    const std::string rlo = require<std::string>(jm, "ref_lo_column", "model");
    const std::string rhi = require<std::string>(jm, "ref_hi_column", "model");
    const json sp = require<json>(jm, "spline", "model");
    cfg.basis = build_basis(sp, data, {alo, ahi, rlo, rhi});
    cfg.spec.model = log_ratio_obs(*cfg.basis, data, alo, ahi, rlo, rhi);
    if (sp.contains("shapes")) {
      std::vector<ShapeKind> shapes;
      for (const std::string& s : require<std::vector<std::string>>(sp, "shapes", "model.spline"))
        shapes.push_back(parse_shape(s));
      beta_constraints.append(shape_constraints(*cfg.basis, shapes));
    }
    if (sp.contains("anchor_exposure"))
      beta_constraints.append(
          anchor_unit_risk(*cfg.basis, require<double>(sp, "anchor_exposure", "model.spline")));
    if (sp.contains("highest_derivative_prior_sd"))
      cfg.spec.priors.push_back(highest_derivative_prior(
          *cfg.basis, require<double>(sp, "highest_derivative_prior_sd", "model.spline")));

    // interval exposures may load the random effect on the midpoint difference
    if (value_or<std::string>(jd, "random_effects", "", "data") == "exposure_difference") {
      std::vector<Eigen::MatrixXd> Zs = exposure_difference_loading(data, alo, ahi, rlo, rhi);
      std::vector<Group> groups = data.groups();
      for (size_t i = 0; i < groups.size(); ++i) groups[i].Z = Zs[i];
      data = MEDataset(std::move(groups), data.covariate_names());
    }
  } else {
    throw SchemaError("unknown model type '" + type + "'");
  }

  cfg.spec.inlier_fraction = value_or<double>(j, "inlier_fraction", 1.0, "config");
  if (j.contains("fixed_gamma"))
    cfg.spec.fixed_gamma = to_vector(require<std::vector<double>>(j, "fixed_gamma", "config"));

  if (j.contains("theta0")) {
    const json t0 = require<json>(j, "theta0", "config");
    Theta t;
    t.beta = to_vector(require<std::vector<double>>(t0, "beta", "theta0"));
    t.gamma = to_vector(require<std::vector<double>>(t0, "gamma", "theta0"));
    t.sigma = to_vector(value_or<std::vector<double>>(t0, "sigma", {}, "theta0"));
    cfg.spec.theta0 = std::move(t);
  }

  if (j.contains("solver")) {
    const json s = require<json>(j, "solver", "config");
    SolverOptions& o = cfg.spec.solver;
    o.kkt_tol = value_or<double>(s, "kkt_tol", o.kkt_tol, "solver");
    o.max_iterations = value_or<int>(s, "max_iterations", o.max_iterations, "solver");
    o.barrier_initial = value_or<double>(s, "barrier_initial", o.barrier_initial, "solver");
    o.barrier_factor = value_or<double>(s, "barrier_factor", o.barrier_factor, "solver");
    o.barrier_min = value_or<double>(s, "barrier_min", o.barrier_min, "solver");
    o.w_tol = value_or<double>(s, "w_tol", o.w_tol, "solver");
    o.max_outer = value_or<int>(s, "max_outer", o.max_outer, "solver");
  }

  cfg.seed = value_or<std::uint64_t>(j, "seed", 0, "config");
  cfg.curve_points = value_or<int>(j, "curve_points", 101, "config");
  if (cfg.curve_points < 2) throw SchemaError("curve_points must be >= 2");

  // lift beta-block rows to the flattened width
  const ParamLayout layout = ParamLayout::infer(data, cfg.spec);
  if (beta_constraints.rows() > 0)
    cfg.spec.constraints =
        lift_beta_constraints(beta_constraints, layout.k_beta(), layout.full_dim());

  return LoadedRun{std::move(cfg), std::move(data)};
}

// ---- output writers ----

std::string fit_json_text(const FitResult& res, const MEDataset& data, std::uint64_t seed) {
  std::vector<std::string> outliers;
  for (const auto& [g, r] : res.outliers)
    outliers.push_back(
        jobj({{"group", jstr(data.group(g).id)}, {"group_index", jnum(g)}, {"row", jnum(r)}}));
  std::vector<std::string> boundary;
  for (int b : res.boundary_rows) boundary.push_back(jnum(b));
  std::vector<std::string> wp_groups;
  for (const auto& g : res.wellposedness.groups)
    wp_groups.push_back(jobj({{"group", jstr(g.group)},
                              {"score", jnum(g.score)},
                              {"flagged", g.flagged ? "true" : "false"}}));
  std::vector<std::string> stage;
  for (double v : res.search_objectives) stage.push_back(jnum(v));

  return jobj({
             {"converged", res.converged ? "true" : "false"},
             {"status", jstr(res.inner.status == SolveStatus::Converged ? "converged"
                             : res.inner.status == SolveStatus::MaxIterations
                                 ? "max_iterations"
                                 : "infeasible")},
             {"objective", jnum(res.objective)},
             {"theta", jobj({{"beta", jvec(res.theta.beta)},
                             {"gamma", jvec(res.theta.gamma)},
                             {"sigma", jvec(res.theta.sigma)}})},
             {"weights", jvec(res.weights.w)},
             {"h", jnum(res.weights.h)},
             {"outliers", jarr(outliers)},
             {"boundary_rows", jarr(boundary)},
             {"outer_iterations", jnum(res.outer_iterations)},
             {"search_objectives", jarr(stage)},
             {"stop_reason", jstr(res.stop_reason)},
             {"kkt", jobj({{"stationarity", jnum(res.inner.kkt_stationarity)},
                           {"feasibility", jnum(res.inner.kkt_feasibility)},
                           {"complementarity", jnum(res.inner.kkt_complementarity)}})},
             {"wellposedness", jobj({{"ok", res.wellposedness.ok ? "true" : "false"},
                                     {"alpha_tol", jnum(res.wellposedness.alpha_tol)},
                                     {"groups", jarr(wp_groups)}})},
             {"seed", jnum(static_cast<double>(seed))},
         }) +
         "\n";
}

Eigen::VectorXd curve_grid(const SplineBasis& basis, int points) {
  Eigen::VectorXd t(points);
  for (int i = 0; i < points; ++i)
    t[i] = basis.lo() + (basis.hi() - basis.lo()) * i / (points - 1);
  return t;
}

void write_curve_csv(const fs::path& path, const SplineBasis& basis, int points,
                     const Eigen::VectorXd& beta, const BootstrapResult* boot,
                     const ParamLayout* layout) {
  const Eigen::VectorXd t = curve_grid(basis, points);
  std::ostringstream out;
  const bool bands = boot != nullptr && boot->n_converged > 0;
  out << (bands ? "exposure,risk,fe_lo,fe_hi,het_lo,het_hi\n" : "exposure,risk\n");

  for (int i = 0; i < t.size(); ++i) {
    const Eigen::VectorXd row = basis.eval(t[i]);
    out << format_g17(t[i]) << ',' << format_g17(row.dot(beta));
    if (bands) {
      std::vector<double> fe, lo, hi;
      for (int r = 0; r < boot->samples.rows(); ++r) {
        if (std::isnan(boot->samples(r, 0))) continue;
        const Eigen::VectorXd th = boot->samples.row(r).transpose();
        const Eigen::VectorXd b = th.head(layout->k_beta());
        const double gsum = th.segment(layout->k_beta(), layout->k_gamma()).sum();
        const double f = row.dot(b);
        const double spread = 1.96 * std::sqrt(std::max(gsum, 0.0));
        fe.push_back(f);
        lo.push_back(f - spread);
        hi.push_back(f + spread);
      }
      std::sort(fe.begin(), fe.end());
      std::sort(lo.begin(), lo.end());
      std::sort(hi.begin(), hi.end());
      out << ',' << format_g17(quantile_type7(fe, 0.025)) << ','
          << format_g17(quantile_type7(fe, 0.975)) << ','
          << format_g17(quantile_type7(lo, 0.025)) << ','
          << format_g17(quantile_type7(hi, 0.975));
    }
    out << '\n';
  }
  write_text(path, out.str());
}

void write_bootstrap_csv(const fs::path& path, const BootstrapResult& boot) {
  std::ostringstream out;
  out << "replicate,converged";
  for (const std::string& c : boot.column_names) out << ',' << c;
  out << '\n';
  for (int r = 0; r < boot.samples.rows(); ++r) {
    const bool ok = !std::isnan(boot.samples(r, 0));
    out << r << ',' << (ok ? 1 : 0);
    for (int c = 0; c < boot.samples.cols(); ++c) out << ',' << format_g17(boot.samples(r, c));
    out << '\n';
  }
  write_text(path, out.str());
}

void write_quantiles_json(const fs::path& path, const BootstrapResult& boot) {
  std::vector<std::string> cols, q025, q500, q975;
  for (size_t c = 0; c < boot.column_names.size(); ++c) {
    cols.push_back(jstr(boot.column_names[c]));
    q025.push_back(jnum(boot.quantiles(0, static_cast<int>(c))));
    q500.push_back(jnum(boot.quantiles(1, static_cast<int>(c))));
    q975.push_back(jnum(boot.quantiles(2, static_cast<int>(c))));
  }
  write_text(path, jobj({{"columns", jarr(cols)},
                         {"q025", jarr(q025)},
                         {"q500", jarr(q500)},
                         {"q975", jarr(q975)},
                         {"n_converged", jnum(boot.n_converged)},
                         {"n_failed", jnum(boot.n_failed)}}) +
                       "\n");
}

// ---- commands ----

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct CommonArgs {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out = ".";
};

int cmd_validate(const CommonArgs& args) {
  const LoadedRun run = load_run(args.config);
  const std::vector<std::string> findings = validate_spec(run.cfg.spec, run.data);
  if (findings.empty()) {
    std::cout << "ok: " << run.data.n_groups() << " groups, " << run.data.n_total()
              << " observations\n";
    return 0;
  }
  for (const std::string& f : findings) std::cerr << "error: " << f << '\n';
  return 2;
}

int cmd_fit(const CommonArgs& args) {
  LoadedRun run = load_run(args.config);
  const std::uint64_t seed = args.seed_set ? args.seed : run.cfg.seed;

  const FitResult res = fit_trimmed(run.data, run.cfg.spec);

  fs::create_directories(args.out);
  write_text(fs::path(args.out) / "fit.json", fit_json_text(res, run.data, seed));
  if (run.cfg.basis)
    write_curve_csv(fs::path(args.out) / "curve.csv", *run.cfg.basis, run.cfg.curve_points,
                    res.theta.beta, nullptr, nullptr);

  std::cout << "objective " << format_g17(res.objective) << ", "
            << (res.converged ? "converged" : "not converged") << ", " << res.outliers.size()
            << " outliers flagged\n";
  return res.converged ? 0 : 3;
}

int cmd_bootstrap(const CommonArgs& args, int replicates) {
  LoadedRun run = load_run(args.config);
  const std::uint64_t seed = args.seed_set ? args.seed : run.cfg.seed;

  const FitResult res = fit_trimmed(run.data, run.cfg.spec);
  fs::create_directories(args.out);
  write_text(fs::path(args.out) / "fit.json", fit_json_text(res, run.data, seed));
  if (!res.converged) {
    std::cerr << "error: base fit did not converge; bootstrap skipped\n";
    return 3;
  }

  BootstrapOptions bo;
  bo.n_replicates = replicates;
  bo.seed = seed;
  bo.threads = resolve_threads(args.threads);
  const BootstrapResult boot = parametric_bootstrap(run.data, run.cfg.spec, res, bo);

  write_bootstrap_csv(fs::path(args.out) / "bootstrap.csv", boot);
  write_quantiles_json(fs::path(args.out) / "quantiles.json", boot);
  if (run.cfg.basis) {
    const ParamLayout layout = ParamLayout::infer(run.data, run.cfg.spec);
    write_curve_csv(fs::path(args.out) / "curve.csv", *run.cfg.basis, run.cfg.curve_points,
                    res.theta.beta, &boot, &layout);
  }

  if (boot.high_failure)
    std::cerr << "warning: " << boot.n_failed << " of " << replicates
              << " bootstrap replicates failed\n";
  std::cout << boot.n_converged << " of " << replicates << " replicates converged\n";
  return 0;
}

int cmd_benchmark(const std::string& mode, const CommonArgs& args, int replications,
                  double inlier_fraction) {
  SimSpec spec;
  if (mode == "meta") spec.mode = BenchmarkMode::Meta;
  else if (mode == "longitudinal") spec.mode = BenchmarkMode::Longitudinal;
  else {
    std::cerr << "error: unknown benchmark mode '" << mode << "'\n";
    return 2;
  }
  spec.seed = args.seed_set ? args.seed : 0;
  spec.replications = replications;
  spec.inlier_fraction = inlier_fraction;

  const BenchmarkResult result = run_benchmark(spec, resolve_threads(args.threads));

  fs::create_directories(args.out);
  const fs::path csv = fs::path(args.out) / ("benchmark_" + mode_name(spec.mode) + ".csv");
  write_benchmark_csv(result, spec, csv.string());

  const MetricsRow& s = result.summary;
  std::cout << "mode " << mode_name(spec.mode) << ": " << result.n_converged << "/"
            << spec.replications << " replications converged\n"
            << "  mean estimates: beta0 " << s.beta0 << ", beta1 " << s.beta1 << ", re_sd "
            << s.re_sd;
  if (spec.mode == BenchmarkMode::Longitudinal) std::cout << ", sigma " << s.sigma;
  std::cout << "\n  w-flag rates: tpf " << s.tpf << ", fpf " << s.fpf
            << "\n  residual rates: tpf " << s.tpf_resid << ", fpf " << s.fpf_resid
            << "\n  wall seconds (sum over replications): " << s.wall_seconds << "\n"
            << "  wrote " << csv.string() << "\n";
  if (result.n_converged == 0) {
    std::cerr << "error: no replication converged\n";
    return 4;
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"robust trimmed mixed-effects estimation"};
  app.require_subcommand(1);

  CommonArgs fit_args, boot_args, bench_args, val_args;
  int boot_replicates = 1000;
  int bench_replications = 30;
  double bench_inlier = 0.8;
  std::string bench_mode;

  auto add_common = [](CLI::App* sub, CommonArgs& a, bool with_config) {
    if (with_config)
      sub->add_option("--config", a.config, "JSON run configuration")->required();
    sub->add_option("--seed", a.seed, "random seed (overrides config)")
        ->each([&a](const std::string&) { a.seed_set = true; });
    sub->add_option("--threads", a.threads, "worker threads (0 = all cores)");
    sub->add_option("--out", a.out, "output directory");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit a model, write fit.json (+ curve.csv)");
  add_common(fit, fit_args, true);

  CLI::App* boot =
      app.add_subcommand("bootstrap", "parametric bootstrap around a fit; writes bootstrap.csv, "
                                      "quantiles.json");
  add_common(boot, boot_args, true);
  boot->add_option("--replicates", boot_replicates, "bootstrap replicates");

  CLI::App* bench = app.add_subcommand("benchmark", "synthetic replication study");
  bench->add_option("mode", bench_mode, "meta | longitudinal")->required();
  add_common(bench, bench_args, false);
  bench->add_option("--replications", bench_replications, "number of replications");
  bench->add_option("--inlier-fraction", bench_inlier, "trimming budget");

  CLI::App* val = app.add_subcommand("validate", "check a config against its dataset");
  add_common(val, val_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (fit->parsed()) return cmd_fit(fit_args);
  if (boot->parsed()) return cmd_bootstrap(boot_args, boot_replicates);
  if (bench->parsed()) return cmd_benchmark(bench_mode, bench_args, bench_replications, bench_inlier);
  if (val->parsed()) return cmd_validate(val_args);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
