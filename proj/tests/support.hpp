#pragma once

// Shared fixtures and oracles for the test suite. Oracles recompute results
// through a different route than the library (dense factorizations, brute
// enumeration, quadrature) so agreement is evidence, not tautology. Test
// instances draw from std::mt19937_64, never from trimfit::RngStream, which
// is itself under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trimfit/dataset.hpp"
#include "trimfit/likelihood.hpp"
#include "trimfit/model_spec.hpp"
#include "trimfit/obs_models.hpp"

namespace testsup {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- instance generation ----

struct Instance {
  trimfit::MEDataset data;
  trimfit::ModelSpec spec;
  trimfit::Theta truth;
};

// Linear mixed-effects instance: m groups with n_i in [n_lo, n_hi] rows,
// k_beta fixed-effect columns (intercept first), k_gamma loadings (ones
// first). y is generated from the model at `truth`, so residual and
// variance scales stay O(1) and finite differencing is well conditioned.
inline Instance random_instance(std::mt19937_64& gen, int m, int n_lo, int n_hi, int k_beta,
                                int k_gamma, trimfit::ErrorKind kind) {
  std::uniform_int_distribution<int> ni_dist(n_lo, n_hi);
  std::normal_distribution<double> stdn(0.0, 1.0);
  std::uniform_real_distribution<double> gamma_dist(0.3, 1.5);
  std::uniform_real_distribution<double> sd_dist(0.5, 1.5);

  Instance out;
  out.truth.beta.resize(k_beta);
  for (int j = 0; j < k_beta; ++j) out.truth.beta[j] = stdn(gen);
  out.truth.gamma.resize(k_gamma);
  for (int j = 0; j < k_gamma; ++j) out.truth.gamma[j] = gamma_dist(gen);
  if (kind == trimfit::ErrorKind::SharedSigma) {
    out.truth.sigma.resize(1);
    out.truth.sigma[0] = sd_dist(gen);
  } else if (kind == trimfit::ErrorKind::GroupSigma) {
    out.truth.sigma.resize(m);
    for (int i = 0; i < m; ++i) out.truth.sigma[i] = sd_dist(gen);
  } else {
    out.truth.sigma.resize(0);
  }

  trimfit::LinearObs lin;
  std::vector<trimfit::Group> groups;
  for (int i = 0; i < m; ++i) {
    const int ni = ni_dist(gen);
    trimfit::Group g;
    g.id = "g" + std::to_string(i);

    Eigen::MatrixXd X(ni, k_beta);
    X.col(0).setOnes();
    for (int c = 1; c < k_beta; ++c)
      for (int r = 0; r < ni; ++r) X(r, c) = stdn(gen);

    g.Z.resize(ni, k_gamma);
    g.Z.col(0).setOnes();
    for (int c = 1; c < k_gamma; ++c)
      for (int r = 0; r < ni; ++r) g.Z(r, c) = stdn(gen);

    Eigen::VectorXd u(k_gamma);
    for (int c = 0; c < k_gamma; ++c) u[c] = std::sqrt(out.truth.gamma[c]) * stdn(gen);

    double noise_sd = 1.0;
    if (kind == trimfit::ErrorKind::SharedSigma) noise_sd = out.truth.sigma[0];
    if (kind == trimfit::ErrorKind::GroupSigma) noise_sd = out.truth.sigma[i];

    g.y = X * out.truth.beta + g.Z * u;
    if (kind == trimfit::ErrorKind::Known) {
      g.se.resize(ni);
      for (int r = 0; r < ni; ++r) {
        g.se[r] = sd_dist(gen);
        g.y[r] += g.se[r] * stdn(gen);
      }
    } else {
      for (int r = 0; r < ni; ++r) g.y[r] += noise_sd * stdn(gen);
    }

    // covariates mirror the non-intercept X columns so CSV round trips work
    g.covariates = X.rightCols(k_beta - 1);
    lin.X.push_back(std::move(X));
    groups.push_back(std::move(g));
  }

  std::vector<std::string> names;
  for (int c = 1; c < k_beta; ++c) names.push_back("x" + std::to_string(c));
  out.data = trimfit::MEDataset(std::move(groups), std::move(names));
  out.spec.model = std::move(lin);
  out.spec.error = kind;
  return out;
}

// Perturbed copy of the truth, kept strictly inside the bounds so central
// differences never cross gamma = 0 or the sigma floor.
inline trimfit::Theta jitter_theta(std::mt19937_64& gen, const trimfit::Theta& t) {
  std::normal_distribution<double> stdn(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.7, 1.4);
  trimfit::Theta out = t;
  for (int j = 0; j < out.beta.size(); ++j) out.beta[j] += 0.3 * stdn(gen);
  for (int j = 0; j < out.gamma.size(); ++j)
    out.gamma[j] = std::max(0.1, out.gamma[j] * scale(gen));
  for (int j = 0; j < out.sigma.size(); ++j)
    out.sigma[j] = std::max(0.2, out.sigma[j] * scale(gen));
  return out;
}

// ---- dense likelihood oracles ----

inline double group_noise_var(const trimfit::ModelSpec& spec, const trimfit::Theta& theta,
                              const trimfit::Group& g, int group, int row) {
  switch (spec.error) {
    case trimfit::ErrorKind::Known: return g.se[row] * g.se[row];
    case trimfit::ErrorKind::SharedSigma: return theta.sigma[0] * theta.sigma[0];
    case trimfit::ErrorKind::GroupSigma: return theta.sigma[group] * theta.sigma[group];
  }
  return 0.0;
}

inline double prior_penalty(const trimfit::ModelSpec& spec, const Eigen::VectorXd& beta) {
  double p = 0.0;
  for (const trimfit::GaussianPrior& pr : spec.priors) {
    const Eigen::VectorXd z = ((pr.A * beta) - pr.mean).cwiseQuotient(pr.sd);
    p += 0.5 * z.squaredNorm();
  }
  return p;
}

// Untrimmed objective via explicit V_i = Z Gamma Z^T + Lambda and a direct
// Cholesky factorization, no low-rank shortcuts.
inline double dense_negloglik(const trimfit::Theta& theta, const trimfit::MEDataset& data,
                              const trimfit::ModelSpec& spec) {
  double total = prior_penalty(spec, theta.beta);
  for (int i = 0; i < data.n_groups(); ++i) {
    const trimfit::Group& g = data.group(i);
    const Eigen::VectorXd r = g.y - trimfit::f_eval(spec.model, theta.beta, i);
    Eigen::MatrixXd V = g.Z * theta.gamma.asDiagonal() * g.Z.transpose();
    for (int j = 0; j < g.n(); ++j) V(j, j) += group_noise_var(spec, theta, g, i, j);
    Eigen::LLT<Eigen::MatrixXd> llt(V);
    total += 0.5 * r.dot(llt.solve(r));
    total += llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  return total;
}

// Trimmed objective via the explicit matrix sqrt(W) Z Gamma Z^T sqrt(W) +
// diag(lambda^w), again fully dense.
inline double dense_trimmed(const trimfit::Theta& theta, const Eigen::VectorXd& w,
                            const trimfit::MEDataset& data, const trimfit::ModelSpec& spec) {
  double total = prior_penalty(spec, theta.beta);
  for (int i = 0; i < data.n_groups(); ++i) {
    const trimfit::Group& g = data.group(i);
    const Eigen::VectorXd wi = w.segment(data.flat_offset(i), g.n());
    const Eigen::VectorXd sw = wi.cwiseSqrt();
    const Eigen::VectorXd r =
        sw.cwiseProduct(g.y - trimfit::f_eval(spec.model, theta.beta, i));
    Eigen::MatrixXd M = sw.asDiagonal() * (g.Z * theta.gamma.asDiagonal() * g.Z.transpose()) *
                        sw.asDiagonal();
    for (int j = 0; j < g.n(); ++j)
      M(j, j) += std::pow(group_noise_var(spec, theta, g, i, j), wi[j]);
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    total += 0.5 * r.dot(llt.solve(r));
    total += llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  return total;
}

// ---- numerics helpers ----

inline double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline double max_rel_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

// Central differences with a step scaled per coordinate.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int j = 0; j < x.size(); ++j) {
    const double hj = step * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + hj;
    const double fp = f(xp);
    xp[j] = x[j] - hj;
    const double fm = f(xp);
    xp[j] = x[j];
    g[j] = (fp - fm) / (2.0 * hj);
  }
  return g;
}

// ---- capped-simplex enumeration oracle ----

// Brute force over all 3^n activity patterns (at-0 / at-1 / free). Every
// candidate produced is feasible for the simplex, and the true projection's
// pattern is among them, so the closest candidate is the projection.
inline Eigen::VectorXd enumerate_projection(const Eigen::VectorXd& v, double h) {
  const int n = static_cast<int>(v.size());
  long total = 1;
  for (int j = 0; j < n; ++j) total *= 3;

  double best = kInf;
  Eigen::VectorXd best_w;
  std::vector<int> free_idx;
  Eigen::VectorXd w(n);
  for (long pat = 0; pat < total; ++pat) {
    long p = pat;
    free_idx.clear();
    double fixed_sum = 0.0;
    for (int j = 0; j < n; ++j, p /= 3) {
      const int d = static_cast<int>(p % 3);
      if (d == 0) {
        w[j] = 0.0;
      } else if (d == 1) {
        w[j] = 1.0;
        fixed_sum += 1.0;
      } else {
        free_idx.push_back(j);
      }
    }
    if (free_idx.empty()) {
      if (std::abs(fixed_sum - h) > 1e-9) continue;
    } else {
      double mu = h - fixed_sum;
      for (int j : free_idx) mu -= v[j];
      mu /= static_cast<double>(free_idx.size());
      bool ok = true;
      for (int j : free_idx) {
        w[j] = v[j] + mu;
        if (w[j] < -1e-12 || w[j] > 1.0 + 1e-12) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      for (int j : free_idx) w[j] = std::clamp(w[j], 0.0, 1.0);
    }
    const double d2 = (w - v).squaredNorm();
    if (d2 < best) {
      best = d2;
      best_w = w;
    }
  }
  return best_w;
}

// ---- quadrature ----

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// ---- dataset surgery ----

inline Eigen::MatrixXd drop_matrix_row(const Eigen::MatrixXd& M, int row) {
  Eigen::MatrixXd out(M.rows() - 1, M.cols());
  out.topRows(row) = M.topRows(row);
  out.bottomRows(M.rows() - 1 - row) = M.bottomRows(M.rows() - 1 - row);
  return out;
}

inline Eigen::VectorXd drop_vector_row(const Eigen::VectorXd& v, int row) {
  Eigen::VectorXd out(v.size() - 1);
  out.head(row) = v.head(row);
  out.tail(v.size() - 1 - row) = v.tail(v.size() - 1 - row);
  return out;
}

// Copy of a linear-model instance with one observation removed from both the
// dataset and the observation model. Groups must keep at least one row.
inline Instance delete_row_instance(const Instance& in, int flat) {
  const auto [gi, ri] = in.data.locate(flat);
  std::vector<trimfit::Group> groups = in.data.groups();
  trimfit::Group& g = groups[static_cast<size_t>(gi)];
  g.y = drop_vector_row(g.y, ri);
  g.Z = drop_matrix_row(g.Z, ri);
  if (g.covariates.cols() > 0) g.covariates = drop_matrix_row(g.covariates, ri);
  else g.covariates.resize(g.y.size(), 0);
  if (g.se.size() > 0) g.se = drop_vector_row(g.se, ri);

  Instance out;
  out.truth = in.truth;
  out.spec = in.spec;
  auto lin = std::get<trimfit::LinearObs>(in.spec.model);
  lin.X[static_cast<size_t>(gi)] = drop_matrix_row(lin.X[static_cast<size_t>(gi)], ri);
  out.spec.model = std::move(lin);
  out.data = trimfit::MEDataset(std::move(groups), in.data.covariate_names());
  return out;
}

// ---- closed-form GLS oracle ----

// Exact minimum of the untrimmed objective over beta on the rows kept by a
// binary mask, for linear models whose variance parameters are all fixed
// (Known se, fixed_gamma). Returns the objective at the GLS solution.
inline double gls_vertex_value(const trimfit::MEDataset& data, const trimfit::ModelSpec& spec,
                               const Eigen::VectorXd& keep) {
  const auto& lin = std::get<trimfit::LinearObs>(spec.model);
  const Eigen::VectorXd gamma = *spec.fixed_gamma;
  const int k = static_cast<int>(lin.X.front().cols());

  struct Block {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::LLT<Eigen::MatrixXd> llt;
  };
  std::vector<Block> blocks;

  for (int i = 0; i < data.n_groups(); ++i) {
    const trimfit::Group& g = data.group(i);
    std::vector<int> idx;
    for (int r = 0; r < g.n(); ++r)
      if (keep[data.flat_offset(i) + r] > 0.5) idx.push_back(r);
    if (idx.empty()) continue;
    const int ni = static_cast<int>(idx.size());
    Block b;
    b.X.resize(ni, k);
    b.y.resize(ni);
    Eigen::MatrixXd Z(ni, gamma.size());
    Eigen::VectorXd lam(ni);
    for (int r = 0; r < ni; ++r) {
      b.X.row(r) = lin.X[static_cast<size_t>(i)].row(idx[static_cast<size_t>(r)]);
      b.y[r] = g.y[idx[static_cast<size_t>(r)]];
      Z.row(r) = g.Z.row(idx[static_cast<size_t>(r)]);
      lam[r] = g.se[idx[static_cast<size_t>(r)]] * g.se[idx[static_cast<size_t>(r)]];
    }
    Eigen::MatrixXd V = Z * gamma.asDiagonal() * Z.transpose();
    V.diagonal() += lam;
    b.llt.compute(V);
    blocks.push_back(std::move(b));
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  for (const Block& b : blocks) {
    H += b.X.transpose() * b.llt.solve(b.X);
    rhs += b.X.transpose() * b.llt.solve(b.y);
  }
  const Eigen::VectorXd beta = H.ldlt().solve(rhs);

  double total = 0.0;
  for (const Block& b : blocks) {
    const Eigen::VectorXd r = b.y - b.X * beta;
    total += 0.5 * r.dot(b.llt.solve(r));
    total += b.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  return total;
}

// ---- filesystem ----

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 gen(std::random_device{}());
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto p = base / ("trimfit_test_" + std::to_string(gen()));
      std::error_code ec;
      if (std::filesystem::create_directory(p, ec)) {
        path = std::move(p);
        return;
      }
    }
    throw std::runtime_error("could not create a temp directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testsup
