#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sgc {

// Block labels are 1-based: tau[i] in {1..K}.
using Labels = std::vector<int>;

struct SbmParams {
  Eigen::MatrixXd b;    // K0 x K0 block connectivity probabilities
  Eigen::VectorXd pi;   // block membership probabilities, strictly positive
  int num_blocks() const { return static_cast<int>(b.rows()); }
  // Numerical rank of b (dimension of the latent positions).
  int rank() const;
  void validate() const;
};

struct AdjacencyMatrix {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> a;
  int n() const { return static_cast<int>(a.rows()); }
  long num_edges() const;
  Eigen::MatrixXd dense() const { return a.cast<double>(); }
  void validate() const;  // symmetric, hollow, {0,1}
};

struct LatentPositions {
  Eigen::MatrixXd x;  // n x d0; all pairwise inner products must lie in [0,1]
  void validate() const;
};

Labels sample_memberships(const Eigen::VectorXd& pi, int n, std::uint64_t seed);

Eigen::MatrixXd edge_probability_matrix(const SbmParams& params, const Labels& tau);

AdjacencyMatrix sample_sbm_conditional(const SbmParams& params, const Labels& tau,
                                       std::uint64_t seed);

std::pair<Labels, AdjacencyMatrix> sample_sbm(int n, const SbmParams& params,
                                              std::uint64_t seed);

AdjacencyMatrix sample_rdpg(const LatentPositions& latent, std::uint64_t seed);

// Edge-list file format: a header line "n <count>" followed by one "u v" line
// per edge, 0-indexed with u < v.
struct EdgeListReport {
  int duplicate_edges = 0;
  std::vector<int> duplicate_lines;
};

void write_edge_list(const AdjacencyMatrix& a, const std::string& path);
AdjacencyMatrix read_edge_list(const std::string& path, EdgeListReport* report = nullptr);

// Label CSV: header "vertex,label", rows "<0-based vertex>,<1-based label>".
void write_labels_csv(const Labels& tau, const std::string& path);
Labels read_labels_csv(const std::string& path);

}  // namespace sgc
