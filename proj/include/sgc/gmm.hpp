#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgc/graph.hpp"

namespace sgc {

// Parameters of the block-structured D-variate Gaussian mixture: component k
// has a free d-dimensional informative block (mean + full covariance) and a
// zero-mean spherical redundant block with variance red_var[k]. When d == D
// there is no redundant block and red_var is empty.
struct ConstrainedGmmParams {
  int d = 0;
  int D = 0;
  int K = 0;
  Eigen::VectorXd weights;                // K, strictly positive, sums to 1
  Eigen::MatrixXd means;                  // K x d, informative means
  std::vector<Eigen::MatrixXd> info_cov;  // K matrices, d x d, symmetric PSD
  Eigen::VectorXd red_var;                // K, empty iff d == D
  void validate() const;
};

struct EmOptions {
  double tol = 1e-8;          // relative log-likelihood change
  int max_iter = 500;
  int restarts = 5;           // 1 k-means start + (restarts-1) random starts
  double sigma2_floor = 1e-12;
  double ridge = 1e-9;        // scaled by trace(SigmaTilde)/d
  int kmeans_iters = 25;
};

struct FitResult {
  enum class Status { kOk, kDegenerate };
  ConstrainedGmmParams params;
  double loglik = 0.0;
  double bic = 0.0;  // 2*loglik - param_count(d,K,D)*log(n); -inf when degenerate
  int n_iter = 0;
  bool converged = false;
  Status status = Status::kOk;
  std::vector<double> loglik_trace;  // one entry per E-step of the winning start
  bool ok() const { return status == Status::kOk; }
};

// Free-parameter count of the model: weights + informative means and
// covariances, plus one redundant variance per component when d < D.
long param_count(int d, int K, int D);

double log_density(const Eigen::VectorXd& z, const ConstrainedGmmParams& p);
Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p);
double mixture_loglik(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p);

// Posterior component probabilities, rows summing to one.
Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p);

// MAP component per row; ties resolve to the smallest component index.
Labels map_labels(const Eigen::MatrixXd& z, const ConstrainedGmmParams& p);

// i.i.d. sample: 1-based component labels plus the n x D data matrix.
std::pair<Labels, Eigen::MatrixXd> sample_model(const ConstrainedGmmParams& p, int n,
                                                std::uint64_t seed);

// Best-of-restarts EM maximum-likelihood fit at a given (d, K). Components
// that collapse (N_k below 10*eps*n) yield a degenerate result with bic = -inf
// rather than an exception, so selection grids stay total.
FitResult em_fit(const Eigen::MatrixXd& z, int d, int K, const EmOptions& opts,
                 std::uint64_t seed);

// One EM run from explicit initial responsibilities, no restarts.
FitResult em_fit_single(const Eigen::MatrixXd& z, int d, int K,
                        const Eigen::MatrixXd& resp0, const EmOptions& opts);

// The closed-form M-step from given responsibilities (one EM inner update),
// exposed for audit against independent optimizers. Throws NumericError when
// a component collapses.
ConstrainedGmmParams m_step_params(const Eigen::MatrixXd& z, int d,
                                   const Eigen::MatrixXd& resp, const EmOptions& opts);

// Recomputes 2*loglik - eta*log(n) from the fitted parameters.
double bic_value(const Eigen::MatrixXd& z, const FitResult& fit);

// Structured text round-trip of fitted parameters (17 significant digits).
void save_params(const ConstrainedGmmParams& p, const std::string& path);
ConstrainedGmmParams load_params(const std::string& path);

}  // namespace sgc
