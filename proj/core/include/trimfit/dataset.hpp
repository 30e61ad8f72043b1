#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace trimfit {

// One group (study / cluster). Z holds the random-effect loadings, one column
// per random-effect dimension. se is empty unless per-observation sampling
// standard deviations are known from the data.
struct Group {
  std::string id;
  Eigen::VectorXd y;
  Eigen::MatrixXd Z;           // n_i x k_gamma
  Eigen::MatrixXd covariates;  // n_i x n_cov, names live on the dataset
  Eigen::VectorXd se;          // size 0 or n_i, entries > 0

  int n() const { return static_cast<int>(y.size()); }
};

// Grouped dataset. Group order and row order within groups are preserved from
// the source; flat observation indices run over groups in order, rows within
// group, and are what TrimWeights indexes.
class MEDataset {
 public:
  MEDataset() = default;
  // Validates invariants (n_i >= 1, consistent Z/covariate widths, unique
  // group ids, se > 0 where present, either all groups carry se or none) and
  // throws ValidationError on the first violation.
  MEDataset(std::vector<Group> groups, std::vector<std::string> covariate_names);

  const std::vector<Group>& groups() const { return groups_; }
  const Group& group(int i) const { return groups_[static_cast<size_t>(i)]; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  int n_groups() const { return static_cast<int>(groups_.size()); }
  int n_total() const { return n_total_; }
  int k_gamma() const { return groups_.empty() ? 0 : static_cast<int>(groups_.front().Z.cols()); }
  bool has_se() const { return !groups_.empty() && groups_.front().se.size() > 0; }

  // Throws SchemaError when the name is unknown.
  int covariate_index(const std::string& name) const;

  int flat_offset(int group) const { return offsets_[static_cast<size_t>(group)]; }
  std::pair<int, int> locate(int flat) const;  // flat index -> (group, row)

 private:
  std::vector<Group> groups_;
  std::vector<std::string> covariate_names_;
  std::vector<int> offsets_;
  int n_total_ = 0;
};

// Trimming weights over flat observation indices; h is the capped-simplex
// level sum(w) = h.
struct TrimWeights {
  Eigen::VectorXd w;
  double h = 0.0;
};

// Structure of the noise diagonal Lambda.
enum class ErrorKind {
  Known,        // lambda_ij = se_ij^2, from the data
  SharedSigma,  // lambda_ij = sigma^2, one estimated sigma
  GroupSigma,   // lambda_ij = sigma_i^2, one estimated sigma per group
};

// Model parameters. gamma entries are random-effect variances (not SDs);
// sigma has length 0 (Known), 1 (SharedSigma) or n_groups (GroupSigma).
struct Theta {
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  Eigen::VectorXd sigma;
};

}  // namespace trimfit
