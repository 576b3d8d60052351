#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Core>

#include "sgc/errors.hpp"

namespace sgc {

namespace detail {
// Finalizer from SplitMix64.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

// Stable 64-bit tag naming a seed stream ("graph", "m1grid", ...).
constexpr std::uint64_t seed_tag(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic sub-seed from a master seed plus a word list. Every random
// task derives its own stream this way, so the scheduling order of parallel
// work never changes any result.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = detail::mix64(seed + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t w : words)
    h = detail::mix64(h ^ (w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
  return h;
}

// Seedable generator with self-contained distributions. The standard library
// distributions are implementation-defined, so uniform/normal/categorical are
// spelled out here; a given seed yields the same stream on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the paired value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Categorical draw by inverse CDF; returns a 0-based index.
  int categorical(const Eigen::VectorXd& p) {
    const double u = uniform();
    double acc = 0.0;
    const int k = static_cast<int>(p.size());
    for (int i = 0; i < k; ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return k - 1;  // guard against rounding in the partial sums
  }

  // Uniform integer in [0, n).
  int below(int n) {
    const int v = static_cast<int>(uniform() * n);
    return v < n ? v : n - 1;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sgc
