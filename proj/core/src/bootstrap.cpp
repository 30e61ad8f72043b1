#include "trimfit/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "trimfit/errors.hpp"
#include "trimfit/rng.hpp"
#include "trimfit/stats.hpp"

namespace trimfit {

std::vector<std::string> theta_column_names(const ParamLayout& layout) {
  std::vector<std::string> names;
  names.reserve(static_cast<size_t>(layout.full_dim()));
  for (int j = 0; j < layout.k_beta(); ++j) names.push_back("beta_" + std::to_string(j));
  for (int j = 0; j < layout.k_gamma(); ++j) names.push_back("gamma_" + std::to_string(j));
  for (int j = 0; j < layout.k_sigma(); ++j) names.push_back("sigma_" + std::to_string(j));
  return names;
}

namespace {

double noise_sd(const ModelSpec& spec, const Theta& theta, const Group& g, int group_idx,
                int row) {
  switch (spec.error) {
    case ErrorKind::Known: return g.se[row];
    case ErrorKind::SharedSigma: return theta.sigma[0];
    case ErrorKind::GroupSigma: return theta.sigma[group_idx];
  }
  return 0.0;
}

MEDataset simulate_replicate(const MEDataset& data, const ModelSpec& spec, const Theta& theta,
                             RngStream stream) {
  std::vector<Group> groups = data.groups();
  for (int i = 0; i < data.n_groups(); ++i) {
    Group& g = groups[static_cast<size_t>(i)];
    RngStream gs = stream.substream(static_cast<std::uint64_t>(i));
    Eigen::VectorXd u(data.k_gamma());
    for (int l = 0; l < u.size(); ++l)
      u[l] = gs.normal(0.0, std::sqrt(std::max(theta.gamma[l], 0.0)));
    Eigen::VectorXd y = f_eval(spec.model, theta.beta, i);
    y.noalias() += g.Z * u;
    for (int r = 0; r < g.n(); ++r) y[r] += gs.normal(0.0, noise_sd(spec, theta, g, i, r));
    g.y = std::move(y);
  }
  return MEDataset(std::move(groups), data.covariate_names());
}

}  //  namespace

BootstrapResult parametric_bootstrap(const MEDataset& data, const ModelSpec& spec,
                                     const FitResult& fit, const BootstrapOptions& opts) {
  if (opts.n_replicates < 1) throw ValidationError("bootstrap needs at least one replicate");

  const ParamLayout layout = ParamLayout::infer(data, spec);
  const int dim = layout.full_dim();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  BootstrapResult out;
  out.column_names = theta_column_names(layout);
  out.samples = Eigen::MatrixXd::Constant(opts.n_replicates, dim, nan);

  ModelSpec rspec = spec;
  rspec.theta0 = fit.theta;  // warm start every refit at the original solution

  const RngStream root = RngStream::root(opts.seed);

  auto run_one = [&](int r) {
    try {
      const MEDataset rep =
          simulate_replicate(data, spec, fit.theta, root.substream(static_cast<std::uint64_t>(r)));
      const FitResult rf = fit_trimmed(rep, rspec);
      if (rf.converged) out.samples.row(r) = layout.flatten(rf.theta).transpose();
    } catch (const Error&) {
      // row stays NaN
    }
  };

  const int threads = std::max(1, opts.threads);
  if (threads == 1) {
    for (int r = 0; r < opts.n_replicates; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < opts.n_replicates; r = next.fetch_add(1)) run_one(r);
      });
    for (std::thread& t : pool) t.join();
  }

  out.quantiles = Eigen::MatrixXd::Constant(3, dim, nan);
  const double probs[3] = {0.025, 0.5, 0.975};
  std::vector<double> col;
  int converged = 0;
  for (int r = 0; r < opts.n_replicates; ++r)
    if (!std::isnan(out.samples(r, 0))) ++converged;
  out.n_converged = converged;
  out.n_failed = opts.n_replicates - converged;
  out.high_failure = out.n_failed > 0.2 * opts.n_replicates;

  if (converged > 0) {
    for (int j = 0; j < dim; ++j) {
      col.clear();
      for (int r = 0; r < opts.n_replicates; ++r)
        if (!std::isnan(out.samples(r, 0))) col.push_back(out.samples(r, j));
      std::sort(col.begin(), col.end());
      for (int q = 0; q < 3; ++q) out.quantiles(q, j) = quantile_type7(col, probs[q]);
    }
  }
  return out;
}

}  // namespace trimfit
