#include <cmath>
#include <cstddef>

#include "sgc/kernels.hpp"

namespace sgc::kernels::scalar {
namespace {

double dot_(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq_(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void add_sq_(const double* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * x[i];
}

double sq_dist_(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

std::size_t max_abs_index_(const double* x, std::size_t n) {
  std::size_t best = 0;
  double best_abs = std::fabs(x[0]);
  for (std::size_t i = 1; i < n; ++i) {
    const double a = std::fabs(x[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  return best;
}

}  // namespace

const Ops ops = {dot_, sum_sq_, add_sq_, sq_dist_, max_abs_index_};

}  // namespace sgc::kernels::scalar
