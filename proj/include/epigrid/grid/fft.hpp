#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace epigrid {

using Complex = std::complex<double>;

/// Half-spectrum layout of a real d-dimensional periodic array: every axis full
/// length except the last, which keeps n/2+1 entries (FFTW r2c convention).
class SpectralLayout {
 public:
  explicit SpectralLayout(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int dim() const { return static_cast<int>(dims_.size()); }
  std::size_t real_size() const { return real_size_; }
  std::size_t size() const { return half_size_; }
  /// Signed wavenumber of entry `idx` along `axis`, in (-n/2, n/2].
  int wavenumber(std::size_t idx, int axis) const { return wavenumbers_[idx * dims_.size() + axis]; }
  /// True for Nyquist entries along `axis` (only when that axis length is even).
  bool is_nyquist(std::size_t idx, int axis) const {
    return dims_[axis] % 2 == 0 && 2 * wavenumber(idx, axis) == dims_[axis];
  }
  /// Multiplicity of entry `idx` when the half spectrum is used to represent the
  /// full one (1 or 2); used for Parseval-type sums.
  double multiplicity(std::size_t idx) const;

 private:
  std::vector<int> dims_;
  std::size_t real_size_;
  std::size_t half_size_;
  std::vector<int> wavenumbers_;
};

/// Real-to-complex FFT with its own aligned buffers. Not thread-safe; use
/// `thread_fft` to get a per-thread instance.
class RealFft {
 public:
  explicit RealFft(const std::vector<int>& dims);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  const SpectralLayout& layout() const { return layout_; }

  /// Unnormalized forward transform: out_k = Σ_x in_x e^{-2πi k·x/n}.
  void forward(std::span<const double> in, std::span<Complex> out);
  /// Normalized inverse: out_x = (1/n^d) Σ_k in_k e^{+2πi k·x/n}.
  void inverse(std::span<const Complex> in, std::span<double> out);

 private:
  struct Impl;
  SpectralLayout layout_;
  std::unique_ptr<Impl> impl_;
};

/// Per-thread FFT workspace for the given shape.
RealFft& thread_fft(const std::vector<int>& dims);

/// In-place unnormalized complex backward DFT (e^{+2πi}) on a d-dimensional array.
void complex_backward_dft(const std::vector<int>& dims, std::span<Complex> data);

}  // namespace epigrid
