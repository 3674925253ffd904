#include "epigrid/grid/continuum.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "epigrid/errors.hpp"

namespace epigrid {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sinc(double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; }

// Gauss–Legendre nodes and weights on [-1, 1], order 5.
constexpr std::array<double, 5> kGlNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                            0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {0.2369268850561891, 0.4786286704993665,
                                              0.5688888888888889, 0.4786286704993665,
                                              0.2369268850561891};

}  // namespace

SpectralField SpectralField::from_samples(const std::vector<int>& dims,
                                          std::span<const double> samples) {
  SpectralField out(dims);
  RealFft& fft = thread_fft(dims);
  fft.forward(samples, out.coeffs);
  const double scale = 1.0 / static_cast<double>(out.layout.real_size());
  for (auto& c : out.coeffs) c *= scale;
  return out;
}

Field SpectralField::to_samples() const {
  RealFft& fft = thread_fft(layout.dims());
  std::vector<Complex> tmp(coeffs);
  const double scale = static_cast<double>(layout.real_size());
  for (auto& c : tmp) c *= scale;
  Field out(layout.real_size());
  fft.inverse(tmp, out);
  return out;
}

Field sample_collocation(const ContinuumFunction& f, const std::vector<int>& dims) {
  const SpectralLayout layout(dims);
  const std::size_t d = dims.size();
  Field out(layout.real_size());
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    for (std::size_t a = 0; a < d; ++a) x[a] = static_cast<double>(idx[a]) / dims[a];
    out[flat] = f(x);
    for (int a = static_cast<int>(d) - 1; a >= 0; --a) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

ContinuumSemigroup::ContinuumSemigroup(int dim, double diffusivity) : dim_(dim), nu_(diffusivity) {
  if (dim < 1) throw ValidationError("semigroup dimension must be >= 1");
  if (!(diffusivity >= 0.0) || !std::isfinite(diffusivity)) {
    throw ValidationError("diffusivity must be finite and >= 0");
  }
}

std::vector<double> ContinuumSemigroup::spectrum(const SpectralLayout& layout) const {
  if (layout.dim() != dim_) throw DimensionError("spectral field dimension mismatch");
  std::vector<double> out(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    double k2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
      const double k = layout.wavenumber(i, a);
      k2 += k * k;
    }
    out[i] = -nu_ * kTwoPi * kTwoPi * k2;
  }
  return out;
}

SpectralField ContinuumSemigroup::apply(const SpectralField& f, double t) const {
  if (!(t >= 0.0)) throw DomainError("semigroup time must be >= 0, got " + std::to_string(t));
  const auto mu = spectrum(f.layout);
  SpectralField out = f;
  for (std::size_t i = 0; i < mu.size(); ++i) out.coeffs[i] *= std::exp(mu[i] * t);
  return out;
}

SpectralField continuum_semigroup_apply(const ContinuumSemigroup& sg, const SpectralField& coeffs,
                                        double t) {
  return sg.apply(coeffs, t);
}

Field project_cells(const TorusGrid& grid, const ContinuumFunction& f) {
  const int d = grid.dim();
  const double eps = grid.mesh();
  Field out(grid.node_count());
  std::vector<double> y(d);
  // Per-axis rule for the cell mean: a cell straddling the seam at 0 is split
  // into its two pieces inside [0,1), each with its own 5-point rule.
  auto axis_rule = [&](double center) {
    std::vector<std::pair<double, double>> pts;
    const double lo = center - 0.5 * eps, hi = center + 0.5 * eps;
    auto add = [&](double a, double b, double shift) {
      if (b <= a) return;
      for (int k = 0; k < 5; ++k) {
        pts.emplace_back(0.5 * (a + b) + 0.5 * (b - a) * kGlNodes[k] + shift,
                         0.5 * (b - a) / eps * kGlWeights[k]);
      }
    };
    if (lo < 0.0) {
      add(lo, 0.0, 1.0);
      add(0.0, hi, 0.0);
    } else if (hi > 1.0) {
      add(lo, 1.0, 0.0);
      add(1.0, hi, -1.0);
    } else {
      add(lo, hi, 0.0);
    }
    return pts;
  };
  std::vector<std::vector<std::pair<double, double>>> rules(d);
  std::vector<std::size_t> q(d);
  for (NodeIndex x = 0; x < grid.node_count(); ++x) {
    const auto center = grid.position(x);
    std::size_t npts = 1;
    for (int a = 0; a < d; ++a) {
      rules[a] = axis_rule(center[a]);
      npts *= rules[a].size();
    }
    double acc = 0.0;
    for (std::size_t p = 0; p < npts; ++p) {
      std::size_t rest = p;
      double w = 1.0;
      for (int a = d - 1; a >= 0; --a) {
        q[a] = rest % rules[a].size();
        rest /= rules[a].size();
      }
      for (int a = 0; a < d; ++a) {
        y[a] = rules[a][q[a]].first;
        w *= rules[a][q[a]].second;
      }
      acc += w * f(y);
    }
    out[x] = acc;
  }
  return out;
}

Field project_spectral(const TorusGrid& grid, const SpectralField& f) {
  const int d = grid.dim();
  if (f.layout.dim() != d) throw DimensionError("spectral field dimension does not match grid");
  const int n = grid.inv_mesh();
  const double eps = grid.mesh();
  const SpectralLayout& layout = f.layout;
  const auto& dims = layout.dims();
  const int last = d - 1;
  std::vector<Complex> folded(grid.node_count(), Complex(0.0, 0.0));
  std::vector<int> k(d);

  auto deposit = [&](const std::vector<int>& kk, Complex c) {
    double weight = 1.0;
    NodeIndex bin = 0;
    for (int a = 0; a < d; ++a) {
      weight *= sinc(std::numbers::pi * kk[a] * eps);
      bin = bin * n + static_cast<NodeIndex>(((kk[a] % n) + n) % n);
    }
    folded[bin] += weight * c;
  };

  for (std::size_t i = 0; i < layout.size(); ++i) {
    for (int a = 0; a < d; ++a) k[a] = layout.wavenumber(i, a);
    // A Nyquist coefficient stands for cos(π n_a x_a); split it between ±n_a/2.
    int nyquist_axes = 0;
    for (int a = 0; a < d; ++a) nyquist_axes += layout.is_nyquist(i, a) ? 1 : 0;
    const Complex c = f.coeffs[i];
    const bool mirrored = k[last] != 0 && !layout.is_nyquist(i, last);
    auto emit = [&](const std::vector<int>& kk, Complex value) {
      if (nyquist_axes == 0) {
        deposit(kk, value);
        return;
      }
      const double share = 1.0 / static_cast<double>(1 << nyquist_axes);
      for (int mask = 0; mask < (1 << nyquist_axes); ++mask) {
        std::vector<int> kv = kk;
        int bit = 0;
        for (int a = 0; a < d; ++a) {
          if (2 * std::abs(kk[a]) == dims[a] && dims[a] % 2 == 0) {
            if (mask & (1 << bit)) kv[a] = -kv[a];
            ++bit;
          }
        }
        deposit(kv, share * value);
      }
    };
    emit(k, c);
    if (mirrored) {
      std::vector<int> neg(d);
      for (int a = 0; a < d; ++a) neg[a] = -k[a];
      emit(neg, std::conj(c));
    }
  }
  complex_backward_dft(grid.dims(), folded);
  Field out(grid.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = folded[i].real();
  return out;
}

}  // namespace epigrid
