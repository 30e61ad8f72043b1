#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trimfit/rng.hpp"
#include "trimfit/trimming.hpp"

namespace trimfit {

enum class BenchmarkMode { Meta, Longitudinal };

std::string mode_name(BenchmarkMode mode);

// Synthetic recipe: y = beta0 + beta1 * x + u_i + eps, x ~ U[x_lo, x_hi],
// u_i ~ N(0, re_sd^2) per group, eps ~ N(0, noise_sd^2). n_outliers rows with
// x in [outlier_x_lo, x_hi] are offset by y - 30 - |N(0, 80^2)|. Meta mode
// attaches se = noise_sd to every row and fits it as known; longitudinal mode
// estimates a shared sigma.
struct SimSpec {
  int n_groups = 10;
  int obs_per_group = 10;
  double beta0 = 0.0;
  double beta1 = 5.0;
  double re_sd = 6.0;     // standard deviation of the group intercepts
  double noise_sd = 4.0;  // measurement SD; also the known se in meta mode
  double x_lo = 0.0;
  double x_hi = 10.0;
  int n_outliers = 15;
  double outlier_x_lo = 6.0;
  double outlier_offset = 30.0;
  double outlier_spread = 80.0;
  int replications = 30;
  std::uint64_t seed = 0;
  BenchmarkMode mode = BenchmarkMode::Meta;
  double inlier_fraction = 0.8;
};

struct SimData {
  MEDataset data;
  std::vector<int> true_outliers;  // flat indices, ascending
};

// Deterministic in (spec.seed, replication); independent of call order. If a
// draw yields fewer eligible rows than n_outliers the whole replicate is
// redrawn on a fresh substream (bounded retries).
SimData simulate_dataset(const SimSpec& spec, int replication);

// Random-intercept linear model [1, x] with the spec's error kind and
// trimming budget.
ModelSpec benchmark_model_spec(const MEDataset& data, const SimSpec& spec);

// Per-replication outcome. Both outlier classifications are kept: flags from
// the fitted weights (w < 0.5) and the post-hoc rule that marks the n - h
// largest absolute residuals. They coincide only when the fit puts exactly
// n - h weights at zero.
struct MetricsRow {
  int replication = 0;
  bool converged = false;
  double beta0 = 0.0, beta1 = 0.0, re_sd = 0.0, sigma = 0.0;  // sigma NaN in meta mode
  double abs_err_beta0 = 0.0, abs_err_beta1 = 0.0, abs_err_re_sd = 0.0, abs_err_sigma = 0.0;
  double tpf = 0.0, fpf = 0.0;              // from trim weights
  double tpf_resid = 0.0, fpf_resid = 0.0;  // from largest residuals
  double wall_seconds = 0.0;
};

MetricsRow compute_metrics(const SimData& sim, const FitResult& fit, const SimSpec& spec);

// Replications run independently (optionally threaded); the summary is the
// columnwise mean over converged rows and is deterministic in (spec, seed).
struct BenchmarkResult {
  std::vector<MetricsRow> rows;
  MetricsRow summary;  // replication = -1, converged count in n_converged
  int n_converged = 0;
  int n_failed = 0;
};

BenchmarkResult run_benchmark(const SimSpec& spec, int threads);

// benchmark_<mode>.csv: one row per replication plus a trailing summary row.
// wall_seconds stays out of the file so identical seeds give identical bytes.
void write_benchmark_csv(const BenchmarkResult& result, const SimSpec& spec,
                         const std::string& path);

}  // namespace trimfit
