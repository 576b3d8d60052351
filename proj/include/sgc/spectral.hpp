#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgc/graph.hpp"

namespace sgc {

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // algebraically descending
  Eigen::MatrixXd eigenvectors;  // n x m, orthonormal, sign-fixed columns
};

// Top `top` algebraically largest eigenpairs of a symmetric matrix. Each
// eigenvector is flipped so its entry of largest magnitude is positive (ties
// resolve to the lowest index), making the decomposition a deterministic
// function of the input.
SpectralDecomposition eig_sym(const Eigen::MatrixXd& a, int top);

struct ExtendedEmbedding {
  Eigen::MatrixXd z;            // n x D; column s has squared norm eigenvalues[s]
  Eigen::VectorXd eigenvalues;  // the top-D eigenvalues behind z
  int dim() const { return static_cast<int>(z.cols()); }
};

// Z = U_[D] * Lambda_[D]^{1/2}. Requires eigenvalue D to be positive; throws
// EmbeddingDimError naming the largest admissible dimension otherwise.
ExtendedEmbedding extended_ase(const Eigen::MatrixXd& a, int big_d);
inline ExtendedEmbedding extended_ase(const AdjacencyMatrix& a, int big_d) {
  return extended_ase(a.dense(), big_d);
}
ExtendedEmbedding embedding_from_eig(const SpectralDecomposition& eig, int big_d);

// Column-contiguous views of the informative/redundant split at d (0 <= d <= D).
Eigen::Ref<const Eigen::MatrixXd> informative_part(const Eigen::MatrixXd& z, int d);
Eigen::Ref<const Eigen::MatrixXd> redundant_part(const Eigen::MatrixXd& z, int d);

struct BlockStats {
  struct Block {
    Eigen::VectorXd mean;
    Eigen::VectorXd var;  // unbiased per-dimension variances (the cov diagonal)
    Eigen::MatrixXd cov;  // unbiased sample covariance
    int count = 0;
  };
  std::vector<Block> blocks;  // indexed by block label - 1
};

// Within-block sample statistics of the rows of y grouped by tau. Every block
// must have at least two members.
BlockStats block_stats(const Eigen::Ref<const Eigen::MatrixXd>& y, const Labels& tau);

// Plain numeric CSV, one row per vertex, 17 significant digits.
void write_embedding_csv(const Eigen::MatrixXd& z, const std::string& path);
Eigen::MatrixXd read_embedding_csv(const std::string& path);

}  // namespace sgc
