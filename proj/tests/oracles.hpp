#pragma once

// Test-only oracles: independent computation routes used to freeze expected
// values. Nothing here may call into the implementation paths it checks.

#include <functional>

#include <Eigen/Core>

#include "sgc/gmm.hpp"
#include "sgc/graph.hpp"

namespace sgc::test {

// Mixture log-pdf with each component covariance assembled as a dense D x D
// matrix (informative block + spherical redundant block) and evaluated via a
// generic dense solver.
double dense_mixture_logpdf(const Eigen::VectorXd& z, const ConstrainedGmmParams& p);

// Expected complete-data log-likelihood sum_{i,k} r_ik [log pi_k + log phi_k(z_i)],
// densities evaluated through the dense route above.
double expected_complete_loglik(const Eigen::MatrixXd& z, const Eigen::MatrixXd& resp,
                                const ConstrainedGmmParams& p);

// Plain full-covariance GMM EM written independently of the constrained
// implementation; starts from the given responsibilities.
struct SimpleGmmFit {
  double loglik = 0.0;
  int iters = 0;
};
SimpleGmmFit simple_unconstrained_em(const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& resp0, int max_iter,
                                     double tol);

// Adjusted Rand index by explicit enumeration of item pairs.
double pair_count_ari(const Labels& a, const Labels& b);

// First profile-likelihood elbow (1-based) by evaluating the two-normal
// pooled-variance model point by point at every split.
int brute_force_elbow(const Eigen::VectorXd& v);

// min over orthogonal W of ||a - b W||_F.
double procrustes_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Nelder-Mead maximization; returns the best value found.
double nelder_mead_max(const std::function<double(const Eigen::VectorXd&)>& f,
                       const Eigen::VectorXd& x0, int max_iter, double step);

}  // namespace sgc::test
