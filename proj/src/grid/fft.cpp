#include "epigrid/grid/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <string>

#include "epigrid/errors.hpp"

namespace epigrid {
namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t product(const std::vector<int>& dims) {
  std::size_t p = 1;
  for (int n : dims) p *= static_cast<std::size_t>(n);
  return p;
}

}  // namespace

SpectralLayout::SpectralLayout(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw DimensionError("spectral layout needs at least one axis");
  for (int n : dims_) {
    if (n < 1) throw DimensionError("axis length must be positive, got " + std::to_string(n));
  }
  real_size_ = product(dims_);
  half_size_ = real_size_ / dims_.back() * (dims_.back() / 2 + 1);
  const std::size_t d = dims_.size();
  wavenumbers_.resize(half_size_ * d);
  std::vector<int> idx(d, 0);
  for (std::size_t flat = 0; flat < half_size_; ++flat) {
    for (std::size_t a = 0; a < d; ++a) {
      const int n = dims_[a];
      const int i = idx[a];
      wavenumbers_[flat * d + a] = (a + 1 == d) ? i : (2 * i <= n ? i : i - n);
    }
    for (int a = static_cast<int>(d) - 1; a >= 0; --a) {
      const int extent = (a + 1 == static_cast<int>(d)) ? dims_[a] / 2 + 1 : dims_[a];
      if (++idx[a] < extent) break;
      idx[a] = 0;
    }
  }
}

double SpectralLayout::multiplicity(std::size_t idx) const {
  const int last = dim() - 1;
  const int k = wavenumber(idx, last);
  if (k == 0 || is_nyquist(idx, last)) return 1.0;
  return 2.0;
}

struct RealFft::Impl {
  double* real_buf = nullptr;
  fftw_complex* spec_buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  double scale = 1.0;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(real_buf);
    fftw_free(spec_buf);
  }
};

RealFft::RealFft(const std::vector<int>& dims) : layout_(dims), impl_(std::make_unique<Impl>()) {
  std::lock_guard lock(planner_mutex());
  impl_->real_buf = fftw_alloc_real(layout_.real_size());
  impl_->spec_buf = fftw_alloc_complex(layout_.size());
  std::vector<int> n(dims.begin(), dims.end());
  const int rank = static_cast<int>(n.size());
  impl_->fwd = fftw_plan_dft_r2c(rank, n.data(), impl_->real_buf, impl_->spec_buf, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r(rank, n.data(), impl_->spec_buf, impl_->real_buf,
                                 FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
  if (!impl_->fwd || !impl_->inv) throw NumericalError("FFTW planning failed");
  impl_->scale = 1.0 / static_cast<double>(layout_.real_size());
}

RealFft::~RealFft() = default;

void RealFft::forward(std::span<const double> in, std::span<Complex> out) {
  if (in.size() != layout_.real_size() || out.size() != layout_.size()) {
    throw DimensionError("forward FFT size mismatch");
  }
  std::copy(in.begin(), in.end(), impl_->real_buf);
  fftw_execute(impl_->fwd);
  std::memcpy(static_cast<void*>(out.data()), impl_->spec_buf, out.size() * sizeof(Complex));
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) {
  if (in.size() != layout_.size() || out.size() != layout_.real_size()) {
    throw DimensionError("inverse FFT size mismatch");
  }
  std::memcpy(impl_->spec_buf, in.data(), in.size() * sizeof(Complex));
  fftw_execute(impl_->inv);
  const double s = impl_->scale;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = impl_->real_buf[i] * s;
}

RealFft& thread_fft(const std::vector<int>& dims) {
  thread_local std::map<std::vector<int>, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[dims];
  if (!slot) slot = std::make_unique<RealFft>(dims);
  return *slot;
}

void complex_backward_dft(const std::vector<int>& dims, std::span<Complex> data) {
  if (data.size() != product(dims)) throw DimensionError("complex DFT size mismatch");
  fftw_complex* buf = fftw_alloc_complex(data.size());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    std::vector<int> n(dims.begin(), dims.end());
    plan = fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf, FFTW_BACKWARD,
                         FFTW_ESTIMATE);
  }
  std::memcpy(buf, data.data(), data.size() * sizeof(Complex));
  fftw_execute(plan);
  std::memcpy(static_cast<void*>(data.data()), buf, data.size() * sizeof(Complex));
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
}

}  // namespace epigrid
