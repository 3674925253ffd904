#include "epigrid/simd/kernels.hpp"

#include <cmath>

namespace epigrid::simd {
namespace {

void spa_scalar(double c, const double* a, const double* b, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += (c * a[i]) * b[i];
}

void axpy_scalar(double c, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += c * x[i];
}

void mul_scalar(double* x, const double* m, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= m[i];
}

double mad_scalar(const double* a, const double* b, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > best || std::isnan(d)) best = d;
  }
  return best;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", spa_scalar, axpy_scalar, mul_scalar, mad_scalar};
  return table;
}

}  // namespace epigrid::simd
