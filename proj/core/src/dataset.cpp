#include "trimfit/dataset.hpp"

#include <set>

#include "trimfit/errors.hpp"

namespace trimfit {

MEDataset::MEDataset(std::vector<Group> groups, std::vector<std::string> covariate_names)
    : groups_(std::move(groups)), covariate_names_(std::move(covariate_names)) {
  if (groups_.empty()) throw ValidationError("dataset has no groups");

  const int k_cov = static_cast<int>(covariate_names_.size());
  const int kg = static_cast<int>(groups_.front().Z.cols());
  const bool with_se = groups_.front().se.size() > 0;

  std::set<std::string> seen;
  offsets_.reserve(groups_.size());
  for (const Group& g : groups_) {
    if (!seen.insert(g.id).second)
      throw ValidationError("duplicate group id '" + g.id + "'");
    const int n = g.n();
    if (n < 1) throw ValidationError("group '" + g.id + "' has no observations");
    if (g.Z.rows() != n)
      throw ValidationError("group '" + g.id + "': Z has " + std::to_string(g.Z.rows()) +
                            " rows for " + std::to_string(n) + " observations");
    if (static_cast<int>(g.Z.cols()) != kg)
      throw ValidationError("group '" + g.id + "': inconsistent Z width");
    if (g.covariates.size() > 0 && g.covariates.rows() != n)
      throw ValidationError("group '" + g.id + "': covariate row count mismatch");
    if (static_cast<int>(g.covariates.cols()) != k_cov && !(g.covariates.size() == 0 && k_cov == 0))
      throw ValidationError("group '" + g.id + "': covariate column count mismatch");
    if ((g.se.size() > 0) != with_se)
      throw ValidationError("group '" + g.id + "': se present in some groups but not all");
    if (with_se) {
      if (g.se.size() != n)
        throw ValidationError("group '" + g.id + "': se length mismatch");
      for (int j = 0; j < n; ++j)
        if (!(g.se[j] > 0.0))
          throw ValidationError("group '" + g.id + "' row " + std::to_string(j) +
                                ": se must be > 0");
    }
    offsets_.push_back(n_total_);
    n_total_ += n;
  }
  if (kg < 1) throw ValidationError("Z must have at least one column");
}

int MEDataset::covariate_index(const std::string& name) const {
  for (size_t i = 0; i < covariate_names_.size(); ++i)
    if (covariate_names_[i] == name) return static_cast<int>(i);
  throw SchemaError("unknown covariate '" + name + "'");
}

std::pair<int, int> MEDataset::locate(int flat) const {
  if (flat < 0 || flat >= n_total_) throw ValidationError("flat index out of range");
  int g = static_cast<int>(offsets_.size()) - 1;
  while (offsets_[static_cast<size_t>(g)] > flat) --g;
  return {g, flat - offsets_[static_cast<size_t>(g)]};
}

}  // namespace trimfit
