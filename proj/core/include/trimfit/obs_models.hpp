#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "trimfit/constraints.hpp"
#include "trimfit/dataset.hpp"
#include "trimfit/splines.hpp"

namespace trimfit {

// Positivity guard for the log models: inner products at or below this value
// raise DomainError rather than feeding log a non-positive argument.
inline constexpr double kDomainEps = 1e-10;

// f_i(beta) = X_i beta.
struct LinearObs {
  std::vector<Eigen::MatrixXd> X;  // one n_i x k_beta block per group
};

// f_ij(beta) = ln <x_ij, beta>; rows are typically spline design rows, so the
// inner product is the modeled relative risk at the observed exposure.
struct LogSplineObs {
  std::vector<Eigen::MatrixXd> X;
};

// f_ij(beta) = ln <x1_ij, beta> - ln <x0_ij, beta> for measurements reported
// against a varying reference exposure.
struct LogRatioObs {
  std::vector<Eigen::MatrixXd> X_alt;
  std::vector<Eigen::MatrixXd> X_ref;
};

using ObservationModel = std::variant<LinearObs, LogSplineObs, LogRatioObs>;

int k_beta(const ObservationModel& m);
int n_model_groups(const ObservationModel& m);
int model_rows(const ObservationModel& m, int group);

// Model predictions and Jacobian for one group. Log models throw DomainError
// carrying (group, row) when an inner product falls below kDomainEps.
Eigen::VectorXd f_eval(const ObservationModel& m, const Eigen::VectorXd& beta, int group);
Eigen::MatrixXd f_jacobian(const ObservationModel& m, const Eigen::VectorXd& beta, int group);

// Builders for the risk-curve models.

// Spline design rows at a point-exposure covariate.
LogSplineObs log_spline_obs(const SplineBasis& basis, const MEDataset& data,
                            const std::string& exposure_column);

// Average-integral design rows for interval exposures [lo, hi] on both the
// alternative and the reference arm.
LogRatioObs log_ratio_obs(const SplineBasis& basis, const MEDataset& data,
                          const std::string& alt_lo, const std::string& alt_hi,
                          const std::string& ref_lo, const std::string& ref_hi);

// Random-effect loading columns: the exposure itself, or the difference of
// interval midpoints for ratio models.
std::vector<Eigen::MatrixXd> exposure_loading(const MEDataset& data,
                                              const std::string& exposure_column);
std::vector<Eigen::MatrixXd> exposure_difference_loading(const MEDataset& data,
                                                         const std::string& alt_lo,
                                                         const std::string& alt_hi,
                                                         const std::string& ref_lo,
                                                         const std::string& ref_hi);

// <basis row at t0, beta> = 1 as paired inequalities; anchors the modeled
// risk to 1 at a reference exposure (typically 0).
LinearConstraintSet anchor_unit_risk(const SplineBasis& basis, double t0);

}  // namespace trimfit
