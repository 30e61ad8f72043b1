#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trimfit/trimming.hpp"

namespace trimfit {

struct BootstrapOptions {
  int n_replicates = 200;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Parametric bootstrap around a fitted model. Replicate r regenerates
//   y_i = f_i(beta_hat) + Z_i u_i + eps_i,   u_i ~ N(0, diag(gamma_hat)),
// eps_i from the fitted noise model, on substream (seed -> r), then refits
// with the same spec (trim weights restart from the center, theta warm-starts
// at the original fit). Rows are a pure function of (seed, r): the thread
// count changes wall time only, never a byte of output.
struct BootstrapResult {
  Eigen::MatrixXd samples;  // n_replicates x full_dim; failed rows are NaN
  std::vector<std::string> column_names;
  Eigen::MatrixXd quantiles;  // rows: 2.5%, 50%, 97.5% over converged rows
  int n_converged = 0;
  int n_failed = 0;
  bool high_failure = false;  // more than 20% of replicates failed
};

BootstrapResult parametric_bootstrap(const MEDataset& data, const ModelSpec& spec,
                                     const FitResult& fit, const BootstrapOptions& opts);

// Flattened-theta column labels: beta_j, gamma_l, sigma_i.
std::vector<std::string> theta_column_names(const ParamLayout& layout);

}  // namespace trimfit
