#include "trimfit/likelihood.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "trimfit/errors.hpp"

namespace trimfit {

namespace {

// Noise variances lambda_ij for one group under the spec's error structure.
Eigen::VectorXd group_lambda(const Theta& theta, const Group& g, int group_index,
                             ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Known:
      return g.se.array().square();
    case ErrorKind::SharedSigma: {
      const double s = theta.sigma[0];
      return Eigen::VectorXd::Constant(g.n(), s * s);
    }
    case ErrorKind::GroupSigma: {
      const double s = theta.sigma[group_index];
      return Eigen::VectorXd::Constant(g.n(), s * s);
    }
  }
  throw NumericError("unreachable error kind");
}

struct Accum {
  double value = 0.0;
  Eigen::VectorXd grad_full;  // [beta; gamma; sigma]
  Eigen::VectorXd grad_w;
  Eigen::VectorXd row_cost;
};

// Shared evaluation core. The group objective is
//   1/2 rt^T M^-1 rt + 1/2 ln|M|,  rt = sqrt(W) r,
//   M = sqrt(W) Z Gamma Z^T sqrt(W) + D,  D_j = lambda_j^w_j,
// expanded through c_j = w_j / D_j into the singularity-free form
//   1/2 (r^T C r - t^T K^-1 t) + 1/2 sum_j w_j ln(lambda_j) + 1/2 ln|K|,
// where C = diag(c), P = Z Gamma^(1/2), K = I + P^T C P, t = P^T C r. All
// gradients come out of this form, so w_j = 0 removes row j exactly and
// nothing divides by sqrt(w).
Accum evaluate(const Theta& theta, const Eigen::VectorXd* w_all, const MEDataset& data,
               const ModelSpec& spec, bool want_grad_theta, bool want_grad_w) {
  const ParamLayout layout = ParamLayout::infer(data, spec);
  const int kb = layout.k_beta();
  const int kg = layout.k_gamma();
  const int ks = layout.k_sigma();

  if (theta.beta.size() != kb || theta.gamma.size() != kg || theta.sigma.size() != ks)
    throw ValidationError("theta does not match the model layout");
  for (int l = 0; l < kg; ++l)
    if (!(theta.gamma[l] >= 0.0)) throw NumericError("gamma must be nonnegative");
  for (int l = 0; l < ks; ++l)
    if (!(theta.sigma[l] > 0.0)) throw NumericError("sigma must be positive");

  Accum acc;
  if (want_grad_theta) acc.grad_full = Eigen::VectorXd::Zero(layout.full_dim());
  if (want_grad_w) {
    acc.grad_w = Eigen::VectorXd::Zero(data.n_total());
    acc.row_cost = Eigen::VectorXd::Zero(data.n_total());
  }

  const Eigen::VectorXd sqrt_gamma = theta.gamma.cwiseSqrt();
  const bool need_psi = want_grad_w || (want_grad_theta && ks > 0);

  for (int i = 0; i < data.n_groups(); ++i) {
    const Group& g = data.group(i);
    const int n = g.n();

    Eigen::VectorXd w;
    if (w_all) {
      w = w_all->segment(data.flat_offset(i), n);
      for (int j = 0; j < n; ++j)
        if (!(w[j] >= 0.0 && w[j] <= 1.0)) throw NumericError("trim weight outside [0, 1]");
    } else {
      w = Eigen::VectorXd::Ones(n);
    }

    const Eigen::VectorXd lambda = group_lambda(theta, g, i, spec.error);
    const Eigen::VectorXd r = g.y - f_eval(spec.model, theta.beta, i);

    Eigen::VectorXd D(n), c(n), Lr(n);
    double logdet_diag = 0.0;
    for (int j = 0; j < n; ++j) {
      Lr[j] = std::log(lambda[j]);
      D[j] = std::pow(lambda[j], w[j]);
      c[j] = (w[j] == 0.0) ? 0.0 : w[j] / D[j];
      logdet_diag += w[j] * Lr[j];
    }

    const Eigen::MatrixXd P = g.Z * sqrt_gamma.asDiagonal();
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(kg, kg);
    K.noalias() += P.transpose() * c.asDiagonal() * P;
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
      throw NumericError("group '" + g.id + "': capacitance matrix not positive definite");

    const Eigen::VectorXd cr = c.cwiseProduct(r);
    const Eigen::VectorXd t = P.transpose() * cr;
    const Eigen::VectorXd u = llt.solve(t);

    const double quad = r.dot(cr) - t.dot(u);
    double logdet_K = 0.0;
    for (int l = 0; l < kg; ++l) logdet_K += std::log(llt.matrixL()(l, l));
    acc.value += 0.5 * quad + 0.5 * logdet_diag + logdet_K;

    if (!want_grad_theta && !want_grad_w) continue;

    const Eigen::VectorXd resid_u = r - P * u;
    const Eigen::VectorXd shat = c.cwiseProduct(resid_u);

    Eigen::VectorXd psi;
    if (need_psi) {
      // psi_j = 1/2 (r_j - p_j^T u)^2 + 1/2 p_j^T K^-1 p_j
      const Eigen::MatrixXd G =
          llt.matrixL().solve(Eigen::MatrixXd(P.transpose()));  // k x n
      psi.resize(n);
      for (int j = 0; j < n; ++j)
        psi[j] = 0.5 * resid_u[j] * resid_u[j] + 0.5 * G.col(j).squaredNorm();
    }

    if (want_grad_theta) {
      const Eigen::MatrixXd J = f_jacobian(spec.model, theta.beta, i);
      acc.grad_full.head(kb).noalias() -= J.transpose() * shat;

      // d/dgamma_l = 1/2 [ (Z^T C Z)_ll - h_l^T K^-1 h_l - (Z^T shat)_l^2 ]
      const Eigen::VectorXd g1 = g.Z.transpose() * shat;
      const Eigen::MatrixXd H = g.Z.transpose() * c.asDiagonal() * P;  // k x k
      const Eigen::MatrixXd KinvHt = llt.solve(H.transpose());
      for (int l = 0; l < kg; ++l) {
        const double zcz = g.Z.col(l).array().square().matrix().dot(c);
        const double quad_l = zcz - H.row(l).dot(KinvHt.col(l));
        acc.grad_full[kb + l] += 0.5 * (quad_l - g1[l] * g1[l]);
      }

      if (ks > 0) {
        // d/dlambda_j = (w_j / lambda_j) (1/2 - psi_j c_j), chained through
        // lambda = sigma^2.
        double dsig = 0.0;
        for (int j = 0; j < n; ++j)
          dsig += (w[j] / lambda[j]) * (0.5 - psi[j] * c[j]);
        const int si = (spec.error == ErrorKind::SharedSigma) ? 0 : i;
        acc.grad_full[kb + kg + si] += dsig * 2.0 * theta.sigma[si];
      }
    }

    if (want_grad_w) {
      for (int j = 0; j < n; ++j) {
        acc.grad_w[data.flat_offset(i) + j] =
            psi[j] * (1.0 - w[j] * Lr[j]) / D[j] + 0.5 * Lr[j];
        acc.row_cost[data.flat_offset(i) + j] = psi[j] / lambda[j] + 0.5 * Lr[j];
      }
    }
  }

  // Gaussian priors on beta.
  for (const GaussianPrior& p : spec.priors) {
    const Eigen::VectorXd res = (p.A * theta.beta - p.mean).cwiseQuotient(p.sd);
    acc.value += 0.5 * res.squaredNorm();
    if (want_grad_theta)
      acc.grad_full.head(kb).noalias() += p.A.transpose() * res.cwiseQuotient(p.sd);
  }

  if (!std::isfinite(acc.value))
    throw NumericError("objective is not finite");
  return acc;
}

}  // namespace

ObjectiveValue neg_marginal_loglik(const Theta& theta, const MEDataset& data,
                                   const ModelSpec& spec, bool want_grad) {
  Accum acc = evaluate(theta, nullptr, data, spec, want_grad, false);
  ObjectiveValue out;
  out.value = acc.value;
  out.grad_theta = std::move(acc.grad_full);
  return out;
}

ObjectiveValue trimmed_neg_loglik(const Theta& theta, const TrimWeights& weights,
                                  const MEDataset& data, const ModelSpec& spec,
                                  bool want_grad_theta, bool want_grad_w) {
  if (weights.w.size() != data.n_total())
    throw ValidationError("trim weights length does not match the dataset");
  Accum acc = evaluate(theta, &weights.w, data, spec, want_grad_theta, want_grad_w);
  ObjectiveValue out;
  out.value = acc.value;
  out.grad_theta = std::move(acc.grad_full);
  out.grad_w = std::move(acc.grad_w);
  out.row_cost = std::move(acc.row_cost);
  return out;
}

WellPosednessReport check_wellposedness(const Theta& theta, const MEDataset& data,
                                        const ModelSpec& spec, double alpha_tol) {
  WellPosednessReport rep;
  rep.alpha_tol = alpha_tol;
  for (int i = 0; i < data.n_groups(); ++i) {
    const Group& g = data.group(i);
    const Eigen::VectorXd lambda = group_lambda(theta, g, i, spec.error);
    Eigen::MatrixXd V = g.Z * theta.gamma.asDiagonal() * g.Z.transpose();
    V += lambda.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
    if (eig.info() != Eigen::Success)
      throw NumericError("group '" + g.id + "': eigendecomposition failed");
    const Eigen::VectorXd r = g.y - f_eval(spec.model, theta.beta, i);
    const Eigen::VectorXd rt = eig.eigenvectors().transpose() * r;
    double score = std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.n(); ++j)
      score = std::min(score, std::max(std::abs(rt[j]), eig.eigenvalues()[j]));
    const bool flagged = score < alpha_tol;
    rep.groups.push_back({g.id, score, flagged});
    if (flagged) rep.ok = false;
  }
  return rep;
}

}  // namespace trimfit
