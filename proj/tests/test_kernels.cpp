#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sgc/kernels.hpp"
#include "sgc/rng.hpp"

using namespace sgc;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * (rng.uniform() * 2.0 - 1.0);
  return v;
}

// Reassociation-aware tolerance: absolute error bounded by the magnitude sum.
void check_close(double ref, double got, double mag) {
  CHECK(std::abs(ref - got) <= 1e-13 * (mag + 1.0));
}

}  // namespace

TEST_CASE("scalar kernels: exact values on small inputs") {
  const double x[] = {1.0, 2.0, 3.0, 4.0};
  const double y[] = {2.0, -1.0, 0.5, 3.0};
  const auto& ops = kernels::scalar::ops;
  CHECK(ops.dot(x, y, 4) == doctest::Approx(13.5));
  CHECK(ops.sum_sq(x, 4) == doctest::Approx(30.0));
  CHECK(ops.sq_dist(x, y, 4) == doctest::Approx(17.25));
  double acc[] = {1.0, 1.0, 1.0, 1.0};
  ops.add_sq(x, acc, 4);
  CHECK(acc[2] == doctest::Approx(10.0));
  const double m[] = {0.5, -3.0, 3.0, 2.0};
  CHECK(ops.max_abs_index(m, 4) == 1);  // first of the tied |3.0| entries
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!kernels::avx2::supported()) return;
  Rng rng(20210907);
  const auto& s = kernels::scalar::ops;
  const auto& v = kernels::avx2::ops;
  // Lengths straddling every unroll boundary, including 0 and 1.
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u,
                        64u, 100u, 255u, 256u, 1001u}) {
    const auto x = random_vec(n, rng, 3.0);
    const auto y = random_vec(n, rng, 2.0);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(x[i] * y[i]);
    check_close(s.dot(x.data(), y.data(), n), v.dot(x.data(), y.data(), n), mag);
    check_close(s.sum_sq(x.data(), n), v.sum_sq(x.data(), n),
                s.sum_sq(x.data(), n));
    check_close(s.sq_dist(x.data(), y.data(), n), v.sq_dist(x.data(), y.data(), n),
                s.sq_dist(x.data(), y.data(), n) + mag);
    auto acc_s = random_vec(n, rng);
    auto acc_v = acc_s;
    s.add_sq(x.data(), acc_s.data(), n);
    v.add_sq(x.data(), acc_v.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      check_close(acc_s[i], acc_v[i], std::abs(acc_s[i]));
    if (n > 0)
      CHECK(s.max_abs_index(x.data(), n) == v.max_abs_index(x.data(), n));
  }
}

TEST_CASE("avx2 max_abs_index keeps the lowest index on ties") {
  if (!kernels::avx2::supported()) return;
  std::vector<double> x(37, 0.25);
  x[5] = -2.0;
  x[21] = 2.0;
  CHECK(kernels::avx2::ops.max_abs_index(x.data(), x.size()) == 5);
}
#endif

TEST_CASE("dispatch honors SGC_KERNELS and reports an ISA") {
  const auto isa = kernels::active_isa();
  CHECK((isa == "scalar" || isa == "avx2"));
  const double x[] = {1.0, 2.0};
  CHECK(kernels::sum_sq(x, 2) == doctest::Approx(5.0));
}
