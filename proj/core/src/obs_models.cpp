#include "trimfit/obs_models.hpp"

#include "trimfit/errors.hpp"

namespace trimfit {

namespace {

// ln <x, beta> rowwise with the positivity guard.
Eigen::VectorXd log_inner(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, int group) {
  Eigen::VectorXd s = X * beta;
  for (int j = 0; j < s.size(); ++j) {
    if (!(s[j] > kDomainEps))
      throw DomainError("log model: inner product " + std::to_string(s[j]) +
                            " <= eps at group " + std::to_string(group) + " row " +
                            std::to_string(j),
                        group, j);
    s[j] = std::log(s[j]);
  }
  return s;
}

// d/dbeta ln <x, beta> = x / <x, beta>, rowwise.
Eigen::MatrixXd log_inner_jac(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, int group) {
  Eigen::VectorXd s = X * beta;
  Eigen::MatrixXd J = X;
  for (int j = 0; j < s.size(); ++j) {
    if (!(s[j] > kDomainEps))
      throw DomainError("log model: inner product " + std::to_string(s[j]) +
                            " <= eps at group " + std::to_string(group) + " row " +
                            std::to_string(j),
                        group, j);
    J.row(j) /= s[j];
  }
  return J;
}

const Eigen::MatrixXd& block(const std::vector<Eigen::MatrixXd>& v, int group) {
  return v[static_cast<size_t>(group)];
}

}  // namespace

int k_beta(const ObservationModel& m) {
  return std::visit(
      [](const auto& obs) -> int {
        using T = std::decay_t<decltype(obs)>;
        if constexpr (std::is_same_v<T, LogRatioObs>) {
          return obs.X_alt.empty() ? 0 : static_cast<int>(obs.X_alt.front().cols());
        } else {
          return obs.X.empty() ? 0 : static_cast<int>(obs.X.front().cols());
        }
      },
      m);
}

int n_model_groups(const ObservationModel& m) {
  return std::visit(
      [](const auto& obs) -> int {
        using T = std::decay_t<decltype(obs)>;
        if constexpr (std::is_same_v<T, LogRatioObs>) {
          return static_cast<int>(obs.X_alt.size());
        } else {
          return static_cast<int>(obs.X.size());
        }
      },
      m);
}

int model_rows(const ObservationModel& m, int group) {
  return std::visit(
      [group](const auto& obs) -> int {
        using T = std::decay_t<decltype(obs)>;
        if constexpr (std::is_same_v<T, LogRatioObs>) {
          return static_cast<int>(block(obs.X_alt, group).rows());
        } else {
          return static_cast<int>(block(obs.X, group).rows());
        }
      },
      m);
}

Eigen::VectorXd f_eval(const ObservationModel& m, const Eigen::VectorXd& beta, int group) {
  return std::visit(
      [&](const auto& obs) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(obs)>;
        if constexpr (std::is_same_v<T, LinearObs>) {
          return block(obs.X, group) * beta;
        } else if constexpr (std::is_same_v<T, LogSplineObs>) {
          return log_inner(block(obs.X, group), beta, group);
        } else {
          return log_inner(block(obs.X_alt, group), beta, group) -
                 log_inner(block(obs.X_ref, group), beta, group);
        }
      },
      m);
}

Eigen::MatrixXd f_jacobian(const ObservationModel& m, const Eigen::VectorXd& beta, int group) {
  return std::visit(
      [&](const auto& obs) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(obs)>;
        if constexpr (std::is_same_v<T, LinearObs>) {
          return block(obs.X, group);
        } else if constexpr (std::is_same_v<T, LogSplineObs>) {
          return log_inner_jac(block(obs.X, group), beta, group);
        } else {
          return log_inner_jac(block(obs.X_alt, group), beta, group) -
                 log_inner_jac(block(obs.X_ref, group), beta, group);
        }
      },
      m);
}

LogSplineObs log_spline_obs(const SplineBasis& basis, const MEDataset& data,
                            const std::string& exposure_column) {
  const int c = data.covariate_index(exposure_column);
  LogSplineObs obs;
  obs.X.reserve(static_cast<size_t>(data.n_groups()));
  for (const Group& g : data.groups()) obs.X.push_back(basis.design(g.covariates.col(c)));
  return obs;
}

LogRatioObs log_ratio_obs(const SplineBasis& basis, const MEDataset& data,
                          const std::string& alt_lo, const std::string& alt_hi,
                          const std::string& ref_lo, const std::string& ref_hi) {
  const int a0 = data.covariate_index(alt_lo);
  const int a1 = data.covariate_index(alt_hi);
  const int r0 = data.covariate_index(ref_lo);
  const int r1 = data.covariate_index(ref_hi);
  LogRatioObs obs;
  for (const Group& g : data.groups()) {
    Eigen::MatrixXd Xa(g.n(), basis.dim());
    Eigen::MatrixXd Xr(g.n(), basis.dim());
    for (int j = 0; j < g.n(); ++j) {
      Xa.row(j) = basis.average_integral_row(g.covariates(j, a0), g.covariates(j, a1)).transpose();
      Xr.row(j) = basis.average_integral_row(g.covariates(j, r0), g.covariates(j, r1)).transpose();
    }
    obs.X_alt.push_back(std::move(Xa));
    obs.X_ref.push_back(std::move(Xr));
  }
  return obs;
}

std::vector<Eigen::MatrixXd> exposure_loading(const MEDataset& data,
                                              const std::string& exposure_column) {
  const int c = data.covariate_index(exposure_column);
  std::vector<Eigen::MatrixXd> Z;
  Z.reserve(static_cast<size_t>(data.n_groups()));
  for (const Group& g : data.groups()) Z.push_back(g.covariates.col(c));
  return Z;
}

std::vector<Eigen::MatrixXd> exposure_difference_loading(const MEDataset& data,
                                                         const std::string& alt_lo,
                                                         const std::string& alt_hi,
                                                         const std::string& ref_lo,
                                                         const std::string& ref_hi) {
  const int a0 = data.covariate_index(alt_lo);
  const int a1 = data.covariate_index(alt_hi);
  const int r0 = data.covariate_index(ref_lo);
  const int r1 = data.covariate_index(ref_hi);
  std::vector<Eigen::MatrixXd> Z;
  for (const Group& g : data.groups()) {
    Eigen::MatrixXd z(g.n(), 1);
    // interval midpoints stand in for the exposure of each arm
    for (int j = 0; j < g.n(); ++j)
      z(j, 0) = 0.5 * (g.covariates(j, a0) + g.covariates(j, a1)) -
                0.5 * (g.covariates(j, r0) + g.covariates(j, r1));
    Z.push_back(std::move(z));
  }
  return Z;
}

LinearConstraintSet anchor_unit_risk(const SplineBasis& basis, double t0) {
  const Eigen::VectorXd x = basis.eval(t0);
  LinearConstraintSet out{Eigen::MatrixXd::Zero(2, basis.dim()), Eigen::VectorXd::Zero(2)};
  out.C.row(0) = x.transpose();
  out.c[0] = 1.0;
  out.C.row(1) = -x.transpose();
  out.c[1] = -1.0;
  return out;
}

}  // namespace trimfit
