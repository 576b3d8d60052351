#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sgc/errors.hpp"
#include "sgc/metrics.hpp"
#include "sgc/rng.hpp"

#include "oracles.hpp"

using namespace sgc;

namespace {

Labels random_labels(int n, int num_k, Rng& rng) {
  Labels lab(n);
  for (int i = 0; i < n; ++i) lab[i] = 1 + rng.below(num_k);
  return lab;
}

}  // namespace

TEST_CASE("ari basics: identity, permutation invariance, frozen value") {
  const Labels a = {1, 1, 2, 2, 3};
  CHECK(ari(a, a) == 1.0);
  const Labels permuted = {3, 3, 1, 1, 2};
  CHECK(ari(a, permuted) == 1.0);
  // brute-force over the 6 vertex pairs gives -0.5
  CHECK(ari({1, 1, 2, 2}, {1, 2, 1, 2}) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(ari({1, 2}, {1, 2, 3}), ParamError);
  CHECK_THROWS_AS(ari({1}, {1}), ParamError);
}

TEST_CASE("ari symmetry and relabeling invariance on random inputs") {
  Rng rng(50);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + rng.below(9);
    const Labels a = random_labels(n, 1 + rng.below(4), rng);
    const Labels b = random_labels(n, 1 + rng.below(4), rng);
    const double ab = ari(a, b);
    CHECK(ab == ari(b, a));
    CHECK(ab <= 1.0);
    Labels a_shift = a;
    for (int& v : a_shift) v = 17 - 3 * v;  // injective relabeling
    CHECK(ari(a_shift, b) == doctest::Approx(ab).epsilon(1e-14));
  }
}

TEST_CASE("ari equals the pair-enumeration oracle (1000 random cases, n <= 10)") {
  Rng rng(51);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + rng.below(9);
    const Labels a = random_labels(n, 1 + rng.below(n), rng);
    const Labels b = random_labels(n, 1 + rng.below(n), rng);
    const double got = ari(a, b);
    const double want = test::pair_count_ari(a, b);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("ari degenerate partitions follow the documented convention") {
  CHECK(ari({1, 1, 1}, {2, 2, 2}) == 1.0);       // both single cluster
  CHECK(ari({1, 2, 3}, {3, 1, 2}) == 1.0);       // both all singletons
  CHECK(ari({1, 1, 1}, {1, 2, 3}) == 0.0);       // trivial but different
}

TEST_CASE("ari is centered at zero against random labelings") {
  Rng rng(52);
  Labels fixed(100);
  for (int i = 0; i < 100; ++i) fixed[i] = i < 50 ? 1 : 2;
  double sum = 0.0;
  for (int t = 0; t < 1000; ++t) sum += ari(fixed, random_labels(100, 2, rng));
  CHECK(std::abs(sum / 1000.0) < 0.02);
}

TEST_CASE("selection_table counts cells and marginal rates") {
  std::vector<std::pair<int, int>> dk(100, {3, 2});
  for (int i = 0; i < 3; ++i) dk[i] = {2, 3};
  const SelectionTable t = selection_table(dk);
  CHECK(t.counts.at({3, 2}) == 97);
  CHECK(t.counts.at({2, 3}) == 3);
  CHECK(t.correct_k_rate(2) == doctest::Approx(0.97));
  CHECK(t.correct_d_rate(3) == doctest::Approx(0.97));

  const SelectionTable single = selection_table({{2, 2}, {2, 2}});
  CHECK(single.counts.size() == 1);
  CHECK_THROWS_AS(selection_table({}), ParamError);

  const std::string path =
      (std::filesystem::temp_directory_path() / "sgc_table.csv").string();
  write_selection_table_csv(t, path);
  std::ifstream in(path);
  std::string header, row1;
  std::getline(in, header);
  std::getline(in, row1);
  CHECK(header == "d_hat,K_hat,count");
  CHECK(row1 == "2,3,3");
  std::filesystem::remove(path);
}

TEST_CASE("sign test tail probabilities") {
  CHECK(sign_test_p_greater(0, 0) == 1.0);
  CHECK(sign_test_p_greater(1, 0) == doctest::Approx(0.5));
  CHECK(sign_test_p_greater(10, 0) == doctest::Approx(std::pow(0.5, 10)));
  // Binomial(6, 1/2): P[X >= 5] = 7/64
  CHECK(sign_test_p_greater(5, 1) == doctest::Approx(7.0 / 64.0));
  CHECK(sign_test_p_greater(30, 70) > 0.999);
}
