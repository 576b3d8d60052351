#pragma once

#include <cstddef>
#include <string_view>

namespace sgc::kernels {

// Raw-pointer reduction primitives behind the EM and block-statistics inner
// loops. The scalar implementations are the reference; SIMD variants are
// selected once at startup from CPU features and must agree with the
// reference up to floating-point reassociation (see the equivalence tests).
// Set SGC_KERNELS=scalar (or avx2) to force a particular lane.
struct Ops {
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  // acc[i] += x[i]^2, used to build suffix squared-norm tables column by column
  void (*add_sq)(const double* x, double* acc, std::size_t n);
  double (*sq_dist)(const double* x, const double* y, std::size_t n);
  // index of the entry with largest |x[i]|; ties resolve to the lowest index
  std::size_t (*max_abs_index)(const double* x, std::size_t n);
};

namespace scalar {
extern const Ops ops;
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const Ops ops;
bool supported();
}
#endif

const Ops& active();
std::string_view active_isa();

inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}
inline double sum_sq(const double* x, std::size_t n) {
  return active().sum_sq(x, n);
}
inline void add_sq(const double* x, double* acc, std::size_t n) {
  active().add_sq(x, acc, n);
}
inline double sq_dist(const double* x, const double* y, std::size_t n) {
  return active().sq_dist(x, y, n);
}
inline std::size_t max_abs_index(const double* x, std::size_t n) {
  return active().max_abs_index(x, n);
}

}  // namespace sgc::kernels
