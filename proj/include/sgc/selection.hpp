#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgc/gmm.hpp"
#include "sgc/spectral.hpp"

namespace sgc {

struct SelectOptions {
  EmOptions em;
  // Grid cells are independent tasks; any thread count gives results identical
  // to sequential evaluation because every cell derives its own seed.
  int threads = 1;
};

struct BicGrid {
  int D = 0;
  int k_max = 0;
  Eigen::MatrixXd bic;            // D x K_max; -inf marks degenerate cells
  std::vector<FitResult> fits;    // row-major by (d, K)
  const FitResult& at(int d, int K) const { return fits[(d - 1) * k_max + (K - 1)]; }
  // Grid maximum; ties prefer smaller d, then smaller K. Throws NumericError
  // when every cell is degenerate.
  std::pair<int, int> argmax() const;
};

// Fits the constrained mixture at every (d, K) cell. Cell (d, K) uses the
// seed derive_seed(seed, {"m1grid", d, K}) so concurrent and sequential
// evaluation coincide.
BicGrid fit_constrained_grid(const Eigen::MatrixXd& z, int k_max,
                             const SelectOptions& opts, std::uint64_t seed);

struct GridCellRecord {
  int d = 0;
  int K = 0;
  double bic = 0.0;
  double loglik = 0.0;
  bool converged = false;
};

struct SelectionResult {
  std::string method;
  int d_hat = 0;
  int k_hat = 0;
  Labels labels;
  std::vector<GridCellRecord> cells;  // every (d, K) cell the method evaluated
};

// Unconstrained full-covariance GMM + BIC sweep over K = 1..k_max on an
// already-truncated embedding (x has d columns). With halt_on_decrease the
// sweep stops at the first strict BIC decrease, keeping the best K so far.
// Seeds derive from (seed, "gmmbic", d_tag, K) so every method that runs this
// sweep at the same (d, K) reproduces the same fit.
struct GmmBicSweep {
  int k_hat = 0;
  FitResult best;
  std::vector<GridCellRecord> cells;
};
GmmBicSweep gmm_bic_sweep(const Eigen::MatrixXd& x, int d_tag, int k_max,
                          bool halt_on_decrease, const EmOptions& em,
                          std::uint64_t seed);

// Simultaneous model selection: argmax of the constrained-model BIC over the
// whole (d, K) grid, labels by the MAP rule of the winning full-D model.
SelectionResult sms(const AdjacencyMatrix& a, int big_d, int k_max,
                    const SelectOptions& opts, std::uint64_t seed);

// Same grid argmax for d, then unconstrained GMM + BIC clustering on the
// embedding truncated to d_hat; the reported K is the second-stage K.
SelectionResult sms_reduced(const AdjacencyMatrix& a, int big_d, int k_max,
                            const SelectOptions& opts, std::uint64_t seed);

// Per d: unconstrained sweep (halting when BIC first decreases), then the
// redundant variances are estimated from the step-1 responsibilities and the
// full-model BIC scores that d. Labels come from the step-1 fit at d_hat.
SelectionResult sms_two_step(const AdjacencyMatrix& a, int big_d, int k_max,
                             const SelectOptions& opts, std::uint64_t seed);

// Embedding-level entry points shared with the Monte Carlo harness (the
// adjacency overloads embed once and delegate here).
SelectionResult sms_from_grid(const Eigen::MatrixXd& z, const BicGrid& grid);
SelectionResult sms_reduced_from_grid(const Eigen::MatrixXd& z, const BicGrid& grid,
                                      const EmOptions& em, std::uint64_t seed);
SelectionResult sms_two_step_from_embedding(const Eigen::MatrixXd& z, int k_max,
                                            const EmOptions& em, std::uint64_t seed);

void write_grid_csv(const std::vector<GridCellRecord>& cells, const std::string& path);
std::string summary_line(const SelectionResult& r, double runtime_ms);

}  // namespace sgc
