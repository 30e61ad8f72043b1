// Microbenchmarks for the hot paths: simplex projection, trimmed likelihood
// evaluation, the inner solve, and spline design assembly. Sizes bracket the
// synthetic study (10 groups x 10 obs) and a 10x larger variant.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "trimfit/capped_simplex.hpp"
#include "trimfit/inner_solver.hpp"
#include "trimfit/likelihood.hpp"
#include "trimfit/simharness.hpp"
#include "trimfit/splines.hpp"
#include "trimfit/trimming.hpp"

using namespace trimfit;

namespace {

SimData make_sim(int groups, int obs) {
  SimSpec spec;
  spec.n_groups = groups;
  spec.obs_per_group = obs;
  spec.n_outliers = groups * obs / 10;
  spec.seed = 7;
  return simulate_dataset(spec, 0);
}

ModelSpec make_spec(const SimData& sim, int groups, int obs) {
  SimSpec spec;
  spec.n_groups = groups;
  spec.obs_per_group = obs;
  return benchmark_model_spec(sim.data, spec);
}

void bm_project_capped_simplex(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v[j] = u(gen);
  const double h = 0.8 * n;
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_capped_simplex(v, h));
  }
}
BENCHMARK(bm_project_capped_simplex)->Arg(100)->Arg(1000)->Arg(10000);

void bm_trimmed_negloglik(benchmark::State& state) {
  const int groups = static_cast<int>(state.range(0));
  const int obs = static_cast<int>(state.range(1));
  const SimData sim = make_sim(groups, obs);
  const ModelSpec spec = make_spec(sim, groups, obs);
  const Theta theta = default_theta0(sim.data, spec);
  const int n = sim.data.n_total();
  TrimWeights w{Eigen::VectorXd::Constant(n, 0.8), 0.8 * n};
  for (auto _ : state) {
    benchmark::DoNotOptimize(trimmed_neg_loglik(theta, w, sim.data, spec, true, true));
  }
}
BENCHMARK(bm_trimmed_negloglik)->Args({10, 10})->Args({30, 30});

void bm_inner_solve(benchmark::State& state) {
  const int groups = static_cast<int>(state.range(0));
  const int obs = static_cast<int>(state.range(1));
  const SimData sim = make_sim(groups, obs);
  const ModelSpec spec = make_spec(sim, groups, obs);
  const int n = sim.data.n_total();
  const TrimWeights w{Eigen::VectorXd::Ones(n), static_cast<double>(n)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(value_function(w, sim.data, spec));
  }
}
BENCHMARK(bm_inner_solve)->Args({10, 10})->Unit(benchmark::kMillisecond);

void bm_full_trimmed_fit(benchmark::State& state) {
  const SimData sim = make_sim(10, 10);
  const ModelSpec spec = make_spec(sim, 10, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_trimmed(sim.data, spec));
  }
}
BENCHMARK(bm_full_trimmed_fit)->Unit(benchmark::kMillisecond);

void bm_spline_design(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  SplineBasis basis(0.0, 10.0, {2.0, 4.0, 6.0, 8.0}, 3);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Eigen::VectorXd t(rows);
  for (int j = 0; j < rows; ++j) t[j] = u(gen);
  for (auto _ : state) {
    benchmark::DoNotOptimize(basis.design(t));
  }
}
BENCHMARK(bm_spline_design)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
