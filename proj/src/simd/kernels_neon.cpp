#include "epigrid/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

#include <cmath>

namespace epigrid::simd {
namespace {

void spa_neon(double c, const double* a, const double* b, double* acc, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    // vmulq + vaddq rather than vfmaq: keeps rounding identical to the scalar path.
    const float64x2_t prod = vmulq_f64(vmulq_f64(vc, vld1q_f64(a + i)), vld1q_f64(b + i));
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), prod));
  }
  for (; i < n; ++i) acc[i] += (c * a[i]) * b[i];
}

void axpy_neon(double c, const double* x, double* y, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(vc, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += c * x[i];
}

void mul_neon(double* x, const double* m, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(m + i)));
  for (; i < n; ++i) x[i] *= m[i];
}

double mad_neon(const double* a, const double* b, std::size_t n) {
  double out = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > out || std::isnan(d)) out = d;
  }
  return out;
}

}  // namespace

const KernelTable* neon_kernels() {
  static const KernelTable table{"neon", spa_neon, axpy_neon, mul_neon, mad_neon};
  return &table;
}

}  // namespace epigrid::simd

#else

namespace epigrid::simd {
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace epigrid::simd

#endif
