#include "epigrid/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cmath>

#define EPIGRID_AVX2 __attribute__((target("avx2")))

namespace epigrid::simd {
namespace {

EPIGRID_AVX2 void spa_avx2(double c, const double* a, const double* b, double* acc,
                           std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_mul_pd(vc, _mm256_loadu_pd(a + i)),
                                       _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), prod));
  }
  for (; i < n; ++i) acc[i] += (c * a[i]) * b[i];
}

EPIGRID_AVX2 void axpy_avx2(double c, const double* x, double* y, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(vc, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += c * x[i];
}

EPIGRID_AVX2 void mul_avx2(double* x, const double* m, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(m + i)));
  }
  for (; i < n; ++i) x[i] *= m[i];
}

EPIGRID_AVX2 double mad_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d best = _mm256_setzero_pd();
  __m256d nan_seen = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    nan_seen = _mm256_or_pd(nan_seen, _mm256_cmp_pd(d, d, _CMP_UNORD_Q));
    best = _mm256_max_pd(best, d);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, best);
  double out = lanes[0];
  for (int k = 1; k < 4; ++k) out = lanes[k] > out ? lanes[k] : out;
  if (_mm256_movemask_pd(nan_seen) != 0) out = std::nan("");
  for (; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > out || std::isnan(d)) out = d;
  }
  return out;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{"avx2", spa_avx2, axpy_avx2, mul_avx2, mad_avx2};
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") ? &table : nullptr;
}

}  // namespace epigrid::simd

#else

namespace epigrid::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace epigrid::simd

#endif
