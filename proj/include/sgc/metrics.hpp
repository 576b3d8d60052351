#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgc/graph.hpp"

namespace sgc {

struct ContingencyTable {
  Eigen::MatrixXi counts;
  Eigen::VectorXi row_sums;
  Eigen::VectorXi col_sums;
  int total = 0;
};

ContingencyTable contingency(const Labels& a, const Labels& b);

// Adjusted Rand index. In the degenerate case where max-index equals expected
// index (for example both partitions trivial), returns 1 when the partitions
// are identical as set partitions and 0 otherwise.
double ari(const Labels& a, const Labels& b);

// Frequency table of (d_hat, K_hat) selections across replicates.
struct SelectionTable {
  std::map<std::pair<int, int>, int> counts;
  int total = 0;
  double correct_k_rate(int k0) const;
  double correct_d_rate(int d0) const;
};

SelectionTable selection_table(const std::vector<std::pair<int, int>>& dk_hats);
void write_selection_table_csv(const SelectionTable& table, const std::string& path);

// One-sided sign test: P[Binomial(wins + losses, 1/2) >= wins], ties excluded
// by the caller. Small p favors "the first method wins more often than not".
double sign_test_p_greater(int wins, int losses);

}  // namespace sgc
