#pragma once

// Data-parallel inner loops shared by the deterministic solvers.
//
// Every kernel has a scalar reference and, where the CPU supports it, a vector
// variant. Variants perform the same IEEE operations in the same order (no FMA
// contraction), so their results are bit-identical and the selected variant
// never changes any output byte.

#include <cstddef>
#include <span>
#include <string_view>

namespace epigrid::simd {

struct KernelTable {
  std::string_view name;
  // acc[i] += (c * a[i]) * b[i]
  void (*scaled_product_accumulate)(double c, const double* a, const double* b, double* acc,
                                    std::size_t n);
  // y[i] += c * x[i]
  void (*axpy)(double c, const double* x, double* y, std::size_t n);
  // x[i] *= m[i]
  void (*multiply_inplace)(double* x, const double* m, std::size_t n);
  // max_i |a[i] - b[i]|, 0 for n == 0
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the variant is not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Table chosen once per process: the best supported variant, unless the
/// EPIGRID_SIMD environment variable forces "scalar".
const KernelTable& active_kernels();

inline void scaled_product_accumulate(double c, std::span<const double> a,
                                      std::span<const double> b, std::span<double> acc) {
  active_kernels().scaled_product_accumulate(c, a.data(), b.data(), acc.data(), acc.size());
}

inline void axpy(double c, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(c, x.data(), y.data(), y.size());
}

inline void multiply_inplace(std::span<double> x, std::span<const double> m) {
  active_kernels().multiply_inplace(x.data(), m.data(), x.size());
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active_kernels().max_abs_diff(a.data(), b.data(), a.size());
}

}  // namespace epigrid::simd
