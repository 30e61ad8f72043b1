#pragma once

#include <string>
#include <vector>

#include "trimfit/dataset.hpp"
#include "trimfit/model_spec.hpp"

namespace trimfit {

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd grad_theta;  // full flattened [beta; gamma; sigma]; empty if not requested
  Eigen::VectorXd grad_w;      // flat observation order; empty if not requested
  // Estimated cost of retaining each observation at unit weight under the
  // current fit: psi_j / lambda_j + ln(lambda_j) / 2, where psi_j is half the
  // squared shrunk residual plus its variance correction. Computed alongside
  // grad_w; used by the outer search to rank candidate vertices.
  Eigen::VectorXd row_cost;
};

// Exact negative marginal log-likelihood plus prior penalties; the additive
// n/2 * ln(2 pi) constant is dropped. Per group the value is
//   1/2 r^T V^-1 r + 1/2 ln|V|,  V = Z Gamma Z^T + Lambda,
// evaluated through the low-rank determinant/Woodbury route, O(n_i k^2).
ObjectiveValue neg_marginal_loglik(const Theta& theta, const MEDataset& data,
                                   const ModelSpec& spec, bool want_grad = true);

// Trimmed objective: residuals scale by sqrt(w), the low-rank term by
// sqrt(w) outer products, and the noise diagonal interpolates elementwise as
// lambda^w, so w = 1 recovers the untrimmed objective and w_j = 0 removes
// row j exactly (lambda^0 = 1 contributes nothing to the log determinant).
ObjectiveValue trimmed_neg_loglik(const Theta& theta, const TrimWeights& weights,
                                  const MEDataset& data, const ModelSpec& spec,
                                  bool want_grad_theta = true, bool want_grad_w = false);

// Identifiability diagnostic: per group, with V = Z Gamma Z^T + Lambda
// eigendecomposed as Q diag(lambda) Q^T and rotated residual rt = Q^T r, the
// score is min_j max(|rt_j|, lambda_j). A score below alpha_tol flags a
// direction in which the likelihood may be flat.
struct WellPosednessReport {
  struct GroupDiag {
    std::string group;
    double score = 0.0;
    bool flagged = false;
  };
  std::vector<GroupDiag> groups;
  double alpha_tol = 0.0;
  bool ok = true;
};

WellPosednessReport check_wellposedness(const Theta& theta, const MEDataset& data,
                                        const ModelSpec& spec, double alpha_tol = 1e-8);

}  // namespace trimfit
