#include "sgc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sgc/errors.hpp"

namespace sgc {

namespace {

// Dense relabeling so arbitrary label values become 0-based indices.
std::vector<int> dense_codes(const Labels& labels, int* num_codes) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  *num_codes = static_cast<int>(sorted.size());
  std::vector<int> codes(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    codes[i] = static_cast<int>(
        std::lower_bound(sorted.begin(), sorted.end(), labels[i]) - sorted.begin());
  return codes;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

ContingencyTable contingency(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw ParamError("label vectors must have equal length");
  if (a.size() < 2) throw ParamError("need at least two items");
  int ra = 0, rb = 0;
  const std::vector<int> ca = dense_codes(a, &ra);
  const std::vector<int> cb = dense_codes(b, &rb);
  ContingencyTable t;
  t.counts.setZero(ra, rb);
  for (std::size_t i = 0; i < ca.size(); ++i) ++t.counts(ca[i], cb[i]);
  t.row_sums = t.counts.rowwise().sum();
  t.col_sums = t.counts.colwise().sum();
  t.total = static_cast<int>(a.size());
  return t;
}

double ari(const Labels& a, const Labels& b) {
  const ContingencyTable t = contingency(a, b);
  double sum_cells = 0.0;
  for (int i = 0; i < t.counts.rows(); ++i)
    for (int j = 0; j < t.counts.cols(); ++j) sum_cells += choose2(t.counts(i, j));
  double sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < t.row_sums.size(); ++i) sum_a += choose2(t.row_sums[i]);
  for (int j = 0; j < t.col_sums.size(); ++j) sum_b += choose2(t.col_sums[j]);
  const double pairs = choose2(t.total);
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) {
    // 0/0 case: both all-singletons, or both one cluster, etc. The partitions
    // agree up to relabeling iff the contingency table is a permutation-like
    // matrix (one nonzero per row and per column).
    if (t.counts.rows() != t.counts.cols()) return 0.0;
    for (int i = 0; i < t.counts.rows(); ++i) {
      int nz = 0;
      for (int j = 0; j < t.counts.cols(); ++j) nz += t.counts(i, j) > 0 ? 1 : 0;
      if (nz != 1) return 0.0;
    }
    return 1.0;
  }
  return (sum_cells - expected) / (max_index - expected);
}

SelectionTable selection_table(const std::vector<std::pair<int, int>>& dk_hats) {
  if (dk_hats.empty()) throw ParamError("selection table needs at least one result");
  SelectionTable t;
  for (const auto& dk : dk_hats) ++t.counts[dk];
  t.total = static_cast<int>(dk_hats.size());
  return t;
}

double SelectionTable::correct_k_rate(int k0) const {
  int hit = 0;
  for (const auto& [dk, c] : counts)
    if (dk.second == k0) hit += c;
  return static_cast<double>(hit) / total;
}

double SelectionTable::correct_d_rate(int d0) const {
  int hit = 0;
  for (const auto& [dk, c] : counts)
    if (dk.first == d0) hit += c;
  return static_cast<double>(hit) / total;
}

void write_selection_table_csv(const SelectionTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "d_hat,K_hat,count\n";
  for (const auto& [dk, c] : table.counts)
    out << dk.first << "," << dk.second << "," << c << "\n";
  if (!out) throw IoError("write failed: " + path);
}

double sign_test_p_greater(int wins, int losses) {
  if (wins < 0 || losses < 0) throw ParamError("counts must be nonnegative");
  const int m = wins + losses;
  if (m == 0) return 1.0;
  // Tail sum of Binomial(m, 1/2) via log binomial coefficients.
  double p = 0.0;
  const double log_half_m = -m * std::log(2.0);
  for (int j = wins; j <= m; ++j) {
    const double log_c = std::lgamma(m + 1.0) - std::lgamma(j + 1.0) -
                         std::lgamma(m - j + 1.0);
    p += std::exp(log_c + log_half_m);
  }
  return std::min(1.0, p);
}

}  // namespace sgc
