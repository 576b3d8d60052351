#include "sgc/gmm.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sgc/errors.hpp"
#include "sgc/kernels.hpp"
#include "sgc/rng.hpp"
#include "sgc/util.hpp"

namespace sgc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

// Cholesky factors and normalization constants for fast density evaluation.
struct Cache {
  std::vector<Eigen::MatrixXd> chol;  // lower factors of info_cov
  Eigen::VectorXd log_const;          // log w_k + Gaussian normalizers
  Eigen::VectorXd inv2sig;            // 1/(2 sigma2_k), unused when d == D
};

std::optional<Cache> build_cache(const ConstrainedGmmParams& p) {
  Cache c;
  c.chol.resize(p.K);
  c.log_const.resize(p.K);
  c.inv2sig.resize(p.K);
  const int red = p.D - p.d;
  for (int k = 0; k < p.K; ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(p.info_cov[k]);
    if (llt.info() != Eigen::Success) return std::nullopt;
    c.chol[k] = llt.matrixL();
    double logdet = 0.0;
    for (int j = 0; j < p.d; ++j) logdet += std::log(c.chol[k](j, j));
    c.log_const[k] = std::log(p.weights[k]) - 0.5 * p.d * kLog2Pi - logdet;
    if (red > 0) {
      c.log_const[k] += -0.5 * red * (kLog2Pi + std::log(p.red_var[k]));
      c.inv2sig[k] = 0.5 / p.red_var[k];
    } else {
      c.inv2sig[k] = 0.0;
    }
  }
  return c;
}

// Squared norms of the redundant row parts, ||z_i[d:D]||^2.
Eigen::VectorXd redundant_sq_norms(const Eigen::MatrixXd& z, int d) {
  Eigen::VectorXd rsq = Eigen::VectorXd::Zero(z.rows());
  const std::size_t n = static_cast<std::size_t>(z.rows());
  for (int s = d; s < z.cols(); ++s)
    kernels::add_sq(z.col(s).data(), rsq.data(), n);
  return rsq;
}

// n x K matrix of log(w_k phi_k(z_i)).
Eigen::MatrixXd log_joint(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p,
                          const Cache& c, const Eigen::VectorXd& rsq) {
  const int n = static_cast<int>(z.rows());
  Eigen::MatrixXd lj(n, p.K);
  const auto x = z.leftCols(p.d);
  Eigen::MatrixXd ct(p.d, n);
  for (int k = 0; k < p.K; ++k) {
    ct = (x.rowwise() - p.means.row(k)).transpose();
    c.chol[k].triangularView<Eigen::Lower>().solveInPlace(ct);
    lj.col(k) = (-0.5) * ct.colwise().squaredNorm().transpose();
    lj.col(k).array() += c.log_const[k];
    if (p.d < p.D) lj.col(k).noalias() -= c.inv2sig[k] * rsq;
  }
  return lj;
}

// Row-wise log-sum-exp; also fills responsibilities when resp != nullptr.
Eigen::VectorXd lse_rows(const Eigen::MatrixXd& lj, Eigen::MatrixXd* resp) {
  Eigen::VectorXd rowmax = lj.rowwise().maxCoeff();
  Eigen::MatrixXd e = (lj.colwise() - rowmax).array().exp();
  Eigen::VectorXd denom = e.rowwise().sum();
  if (resp != nullptr) {
    e.array().colwise() /= denom.array();
    *resp = std::move(e);
  }
  return rowmax.array() + denom.array().log();
}

struct MStepOut {
  ConstrainedGmmParams params;
  bool degenerate = false;
};

MStepOut m_step(const Eigen::MatrixXd& z, int d, const Eigen::MatrixXd& resp,
                const Eigen::VectorXd& rsq, const EmOptions& opts) {
  const int n = static_cast<int>(z.rows());
  const int big_d = static_cast<int>(z.cols());
  const int num_k = static_cast<int>(resp.cols());

  MStepOut out;
  Eigen::VectorXd nk = resp.colwise().sum();
  if ((nk.array() < 10.0 * std::numeric_limits<double>::epsilon() * n).any()) {
    out.degenerate = true;
    return out;
  }

  auto& p = out.params;
  p.d = d;
  p.D = big_d;
  p.K = num_k;
  p.weights = nk / static_cast<double>(n);

  const auto x = z.leftCols(d);
  p.means = resp.transpose() * x;
  p.means.array().colwise() /= nk.array();

  p.info_cov.resize(num_k);
  Eigen::MatrixXd centered(n, d), scaled(n, d);
  for (int k = 0; k < num_k; ++k) {
    centered = x.rowwise() - p.means.row(k);
    scaled = centered.array().colwise() * resp.col(k).array();
    Eigen::MatrixXd s = (scaled.transpose() * centered) / nk[k];
    s = 0.5 * (s + s.transpose());
    const double tr = s.trace();
    s.diagonal().array() += opts.ridge * (tr > 0.0 ? tr / d : 1e-12);
    p.info_cov[k] = std::move(s);
  }

  if (d < big_d) {
    p.red_var.resize(num_k);
    const std::size_t nn = static_cast<std::size_t>(n);
    for (int k = 0; k < num_k; ++k)
      p.red_var[k] = std::max(opts.sigma2_floor,
                              kernels::dot(resp.col(k).data(), rsq.data(), nn) /
                                  ((big_d - d) * nk[k]));
  }
  return out;
}

// Hard k-means assignment responsibilities: k-means++ seeding then Lloyd.
Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& x, int num_k, int iters, Rng& rng) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const std::size_t dd = static_cast<std::size_t>(d);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xr = x;

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> centers(num_k, d);
  centers.row(0) = xr.row(rng.below(n));
  Eigen::VectorXd dist2(n);
  for (int i = 0; i < n; ++i)
    dist2[i] = kernels::sq_dist(xr.row(i).data(), centers.row(0).data(), dd);
  for (int k = 1; k < num_k; ++k) {
    const double total = dist2.sum();
    int pick;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += dist2[i];
        if (target < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    centers.row(k) = xr.row(pick);
    for (int i = 0; i < n; ++i)
      dist2[i] = std::min(dist2[i],
                          kernels::sq_dist(xr.row(i).data(), centers.row(k).data(), dd));
  }

  std::vector<int> assign(n, 0), counts(num_k, 0);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = kernels::sq_dist(xr.row(i).data(), centers.row(0).data(), dd);
      for (int k = 1; k < num_k; ++k) {
        const double dk = kernels::sq_dist(xr.row(i).data(), centers.row(k).data(), dd);
        if (dk < best_d) {
          best_d = dk;
          best = k;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && it > 0) break;
    std::fill(counts.begin(), counts.end(), 0);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sums =
        Eigen::MatrixXd::Zero(num_k, d);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += xr.row(i);
      ++counts[assign[i]];
    }
    for (int k = 0; k < num_k; ++k)
      if (counts[k] > 0) centers.row(k) = sums.row(k) / counts[k];
    // empty clusters keep their previous center
  }

  // Give every empty cluster the point farthest from its assigned center.
  std::fill(counts.begin(), counts.end(), 0);
  for (int i = 0; i < n; ++i) ++counts[assign[i]];
  for (int k = 0; k < num_k; ++k) {
    if (counts[k] > 0) continue;
    int far = -1;
    double far_d = -1.0;
    for (int i = 0; i < n; ++i) {
      if (counts[assign[i]] <= 1) continue;
      const double di =
          kernels::sq_dist(xr.row(i).data(), centers.row(assign[i]).data(), dd);
      if (di > far_d) {
        far_d = di;
        far = i;
      }
    }
    if (far < 0) break;
    --counts[assign[far]];
    assign[far] = k;
    counts[k] = 1;
  }

  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, num_k);
  for (int i = 0; i < n; ++i) resp(i, assign[i]) = 1.0;
  return resp;
}

Eigen::MatrixXd random_resp(int n, int num_k, Rng& rng) {
  Eigen::MatrixXd resp(n, num_k);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int k = 0; k < num_k; ++k) {
      // strictly positive so no component starts empty
      const double u = rng.uniform() + 1e-12;
      resp(i, k) = u;
      row_sum += u;
    }
    resp.row(i) /= row_sum;
  }
  return resp;
}

FitResult degenerate_result(int d, int big_d, int num_k) {
  FitResult fit;
  fit.params.d = d;
  fit.params.D = big_d;
  fit.params.K = num_k;
  fit.loglik = kNegInf;
  fit.bic = kNegInf;
  fit.status = FitResult::Status::kDegenerate;
  return fit;
}

FitResult run_em(const Eigen::MatrixXd& z, int d, int num_k,
                 const Eigen::MatrixXd& resp0, const Eigen::VectorXd& rsq,
                 const EmOptions& opts) {
  const int big_d = static_cast<int>(z.cols());
  MStepOut ms = m_step(z, d, resp0, rsq, opts);
  if (ms.degenerate) return degenerate_result(d, big_d, num_k);

  FitResult fit;
  fit.params = std::move(ms.params);
  double ll_prev = kNegInf;
  Eigen::MatrixXd resp;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const auto cache = build_cache(fit.params);
    if (!cache) return degenerate_result(d, big_d, num_k);
    const Eigen::MatrixXd lj = log_joint(z, fit.params, *cache, rsq);
    const Eigen::VectorXd lse = lse_rows(lj, &resp);
    const double ll = lse.sum();
    if (!std::isfinite(ll)) return degenerate_result(d, big_d, num_k);
    fit.loglik_trace.push_back(ll);
    fit.loglik = ll;
    fit.n_iter = it;
    if (std::abs(ll - ll_prev) <= opts.tol * (1.0 + std::abs(ll))) {
      fit.converged = true;
      return fit;
    }
    ll_prev = ll;
    ms = m_step(z, d, resp, rsq, opts);
    if (ms.degenerate) return degenerate_result(d, big_d, num_k);
    fit.params = std::move(ms.params);
  }
  // Ran out of iterations; report the likelihood at the final parameters.
  const auto cache = build_cache(fit.params);
  if (!cache) return degenerate_result(d, big_d, num_k);
  const double ll = lse_rows(log_joint(z, fit.params, *cache, rsq), nullptr).sum();
  if (!std::isfinite(ll)) return degenerate_result(d, big_d, num_k);
  fit.loglik_trace.push_back(ll);
  fit.loglik = ll;
  return fit;
}

}  // namespace

void ConstrainedGmmParams::validate() const {
  if (d < 1 || d > D) throw ParamError("need 1 <= d <= D");
  if (K < 1) throw ParamError("need K >= 1");
  if (weights.size() != K || means.rows() != K || means.cols() != d ||
      static_cast<int>(info_cov.size()) != K)
    throw ParamError("parameter shapes do not match (d, K)");
  for (int k = 0; k < K; ++k)
    if (!(weights[k] > 0.0))
      throw ParamError("mixing weights must be strictly positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw ParamError("mixing weights must sum to 1 within 1e-12");
  for (int k = 0; k < K; ++k) {
    const auto& s = info_cov[k];
    if (s.rows() != d || s.cols() != d)
      throw ParamError("informative covariance has wrong shape");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ParamError("informative covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw ParamError("informative covariance must be positive semidefinite");
  }
  if (d < D) {
    if (red_var.size() != K)
      throw ParamError("need one redundant variance per component when d < D");
    for (int k = 0; k < K; ++k)
      if (!(red_var[k] > 0.0))
        throw ParamError("redundant variances must be strictly positive");
  } else if (red_var.size() != 0) {
    throw ParamError("redundant variances must be absent when d == D");
  }
}

long param_count(int d, int K, int D) {
  if (d < 1 || d > D || K < 1) throw ParamError("need 1 <= d <= D and K >= 1");
  const long kl = K;
  long eta = (kl - 1) + kl * d + kl * d * (d + 1) / 2;
  if (d < D) eta += kl;  // one spherical variance per component
  return eta;
}

Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p) {
  p.validate();
  if (z.cols() != p.D) throw ParamError("data dimension does not match D");
  const auto cache = build_cache(p);
  if (!cache) throw NumericError("informative covariance is singular");
  return lse_rows(log_joint(z, p, *cache, redundant_sq_norms(z, p.d)), nullptr);
}

double log_density(const Eigen::VectorXd& z, const ConstrainedGmmParams& p) {
  return log_density_rows(z.transpose(), p)[0];
}

double mixture_loglik(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p) {
  return log_density_rows(z, p).sum();
}

Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p) {
  p.validate();
  if (z.cols() != p.D) throw ParamError("data dimension does not match D");
  const auto cache = build_cache(p);
  if (!cache) throw NumericError("informative covariance is singular");
  Eigen::MatrixXd resp;
  lse_rows(log_joint(z, p, *cache, redundant_sq_norms(z, p.d)), &resp);
  return resp;
}

Labels map_labels(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p) {
  p.validate();
  if (z.cols() != p.D) throw ParamError("data dimension does not match D");
  const auto cache = build_cache(p);
  if (!cache) throw NumericError("informative covariance is singular");
  const Eigen::MatrixXd lj = log_joint(z, p, *cache, redundant_sq_norms(z, p.d));
  Labels labels(z.rows());
  for (int i = 0; i < z.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < p.K; ++k)
      if (lj(i, k) > lj(i, best)) best = k;
    labels[i] = best + 1;
  }
  return labels;
}

std::pair<Labels, Eigen::MatrixXd> sample_model(const ConstrainedGmmParams& p, int n,
                                                std::uint64_t seed) {
  p.validate();
  if (n < 1) throw ParamError("n must be >= 1");
  std::vector<Eigen::MatrixXd> chol(p.K);
  for (int k = 0; k < p.K; ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(p.info_cov[k]);
    if (llt.info() != Eigen::Success)
      throw NumericError("informative covariance is not positive definite; cannot sample");
    chol[k] = llt.matrixL();
  }
  Rng rng(seed);
  Labels labels(n);
  Eigen::MatrixXd z(n, p.D);
  Eigen::VectorXd xi(p.d);
  for (int i = 0; i < n; ++i) {
    const int k = rng.categorical(p.weights);
    labels[i] = k + 1;
    for (int j = 0; j < p.d; ++j) xi[j] = rng.normal();
    z.row(i).head(p.d) = p.means.row(k) + (chol[k] * xi).transpose();
    const double sd = p.d < p.D ? std::sqrt(p.red_var[k]) : 0.0;
    for (int j = p.d; j < p.D; ++j) z(i, j) = sd * rng.normal();
  }
  return {std::move(labels), std::move(z)};
}

FitResult em_fit(const Eigen::MatrixXd& z, int d, int num_k, const EmOptions& opts,
                 std::uint64_t seed) {
  const int n = static_cast<int>(z.rows());
  const int big_d = static_cast<int>(z.cols());
  if (d < 1 || d > big_d) throw ParamError("need 1 <= d <= D");
  if (num_k < 1) throw ParamError("need K >= 1");
  if (n <= num_k) throw ParamError("need n > K");
  if (opts.restarts < 1 || opts.max_iter < 1) throw ParamError("bad EM options");

  const Eigen::VectorXd rsq = redundant_sq_norms(z, d);
  const int restarts = num_k == 1 ? 1 : opts.restarts;  // all K=1 starts coincide

  FitResult best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, {seed_tag("restart"), static_cast<std::uint64_t>(r)}));
    const Eigen::MatrixXd resp0 =
        r == 0 ? (num_k == 1 ? Eigen::MatrixXd::Ones(n, 1).eval()
                             : kmeans_init(z.leftCols(d), num_k, opts.kmeans_iters, rng))
               : random_resp(n, num_k, rng);
    FitResult fit = run_em(z, d, num_k, resp0, rsq, opts);
    if (!have_best || (fit.ok() && (!best.ok() || fit.loglik > best.loglik))) {
      best = std::move(fit);
      have_best = true;
    }
  }

  if (best.ok())
    best.bic = 2.0 * best.loglik - param_count(d, num_k, big_d) * std::log(n);
  return best;
}

ConstrainedGmmParams m_step_params(const Eigen::MatrixXd& z, int d,
                                   const Eigen::MatrixXd& resp, const EmOptions& opts) {
  if (d < 1 || d > z.cols()) throw ParamError("need 1 <= d <= D");
  if (resp.rows() != z.rows()) throw ParamError("responsibility rows must match data");
  MStepOut out = m_step(z, d, resp, redundant_sq_norms(z, d), opts);
  if (out.degenerate) throw NumericError("M-step collapsed a component");
  return out.params;
}

FitResult em_fit_single(const Eigen::MatrixXd& z, int d, int num_k,
                        const Eigen::MatrixXd& resp0, const EmOptions& opts) {
  const int n = static_cast<int>(z.rows());
  const int big_d = static_cast<int>(z.cols());
  if (d < 1 || d > big_d) throw ParamError("need 1 <= d <= D");
  if (resp0.rows() != n || resp0.cols() != num_k)
    throw ParamError("initial responsibilities have the wrong shape");
  FitResult fit = run_em(z, d, num_k, resp0, redundant_sq_norms(z, d), opts);
  if (fit.ok())
    fit.bic = 2.0 * fit.loglik - param_count(d, num_k, big_d) * std::log(n);
  return fit;
}

double bic_value(const Eigen::MatrixXd& z, const FitResult& fit) {
  if (!fit.ok()) return kNegInf;
  const auto& p = fit.params;
  return 2.0 * mixture_loglik(z, p) -
         param_count(p.d, p.K, p.D) * std::log(static_cast<double>(z.rows()));
}

void save_params(const ConstrainedGmmParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "sgc-gmm-params 1\n";
  out << "d " << p.d << "\nD " << p.D << "\nK " << p.K << "\n";
  out << "weights";
  for (int k = 0; k < p.K; ++k) out << " " << format_g17(p.weights[k]);
  out << "\n";
  for (int k = 0; k < p.K; ++k) {
    out << "mean " << (k + 1);
    for (int j = 0; j < p.d; ++j) out << " " << format_g17(p.means(k, j));
    out << "\n";
    out << "info_cov " << (k + 1) << "\n";
    for (int i = 0; i < p.d; ++i) {
      for (int j = 0; j < p.d; ++j) {
        if (j) out << " ";
        out << format_g17(p.info_cov[k](i, j));
      }
      out << "\n";
    }
    if (p.d < p.D) out << "sigma2 " << (k + 1) << " " << format_g17(p.red_var[k]) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

ConstrainedGmmParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "sgc-gmm-params" || version != 1)
    throw IoError(path + ": not a sgc-gmm-params file");
  ConstrainedGmmParams p;
  std::string key;
  in >> key >> p.d >> key >> p.D >> key >> p.K;
  if (!in) throw IoError(path + ": truncated header");
  p.weights.resize(p.K);
  p.means.resize(p.K, p.d);
  p.info_cov.assign(p.K, Eigen::MatrixXd(p.d, p.d));
  if (p.d < p.D) p.red_var.resize(p.K);
  in >> key;
  for (int k = 0; k < p.K; ++k) in >> p.weights[k];
  for (int k = 0; k < p.K; ++k) {
    int idx = 0;
    in >> key >> idx;
    for (int j = 0; j < p.d; ++j) in >> p.means(k, j);
    in >> key >> idx;
    for (int i = 0; i < p.d; ++i)
      for (int j = 0; j < p.d; ++j) in >> p.info_cov[k](i, j);
    if (p.d < p.D) in >> key >> idx >> p.red_var[k];
  }
  if (!in) throw IoError(path + ": truncated parameter block");
  p.validate();
  return p;
}

}  // namespace sgc
