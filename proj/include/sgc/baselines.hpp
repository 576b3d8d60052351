#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "sgc/selection.hpp"

namespace sgc {

struct ElbowResult {
  std::vector<int> elbows;                  // 1-based indices, strictly increasing
  std::vector<Eigen::VectorXd> profiles;    // per elbow: profile log-likelihood by split
};

// Profile-likelihood scree-plot elbows: each candidate split models the head
// and tail as two normal samples with separate means and a pooled (biased,
// divide-by-m) variance; the elbow maximizes the profile log-likelihood.
// Elbow r+1 is computed on the tail that follows elbow r.
ElbowResult zg_elbow(const Eigen::VectorXd& values, int ell);

// Sequential baseline: d_hat = the ell-th elbow of the top-D eigenvalues of A,
// then unconstrained GMM + BIC on the embedding truncated to d_hat.
SelectionResult seq_bic_zg(const AdjacencyMatrix& a, int big_d, int ell, int k_max,
                           const SelectOptions& opts, std::uint64_t seed);

}  // namespace sgc
