#include "epigrid/model/contact_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "epigrid/errors.hpp"

namespace epigrid {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kRowTolerance = 1e-12;

// Mass of the periodized unit Gaussian centered at x on the periodic interval
// [center - half, center + half].
double gaussian_cell_mass(double x, double center, double half, double sigma) {
  const double s = sigma * std::numbers::sqrt2;
  const int images = static_cast<int>(std::ceil(12.0 * sigma)) + 1;
  double acc = 0.0;
  for (int j = -images; j <= images; ++j) {
    const double hi = (center + half + j - x) / s;
    const double lo = (center - half + j - x) / s;
    acc += 0.5 * (std::erf(hi) - std::erf(lo));
  }
  return acc;
}

// Length of the overlap of [x - r, x + r] with the periodic interval
// [center - half, center + half], divided by 2r.
double box_cell_mass(double x, double center, double half, double r) {
  double acc = 0.0;
  for (int j = -1; j <= 1; ++j) {
    const double lo = std::max(x - r, center - half + j);
    const double hi = std::min(x + r, center + half + j);
    if (hi > lo) acc += hi - lo;
  }
  return acc / (2.0 * r);
}

double sinc(double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; }

double kind_scale(const KernelKind& kind) {
  return std::visit(Overloaded{[](const LocalKernel& k) { return k.scale; },
                               [](const GaussianKernel& k) { return k.scale; },
                               [](const TopHatKernel& k) { return k.scale; },
                               [](const MatrixKernel& k) {
                                 const std::size_t m = static_cast<std::size_t>(
                                     std::pow(k.inv_mesh, k.dim));
                                 double best = 0.0;
                                 for (std::size_t x = 0; x < m; ++x) {
                                   double s = 0.0;
                                   for (std::size_t y = 0; y < m; ++y) s += k.entries[x * m + y];
                                   best = std::max(best, s);
                                 }
                                 return best;
                               }},
                    kind);
}

void validate_kind(const KernelKind& kind) {
  std::visit(Overloaded{
                 [](const LocalKernel& k) {
                   if (!(k.scale >= 0.0)) throw ValidationError("kernel scale must be >= 0");
                 },
                 [](const GaussianKernel& k) {
                   if (!(k.scale >= 0.0)) throw ValidationError("kernel scale must be >= 0");
                   if (!(k.sigma > 0.0)) throw ValidationError("gaussian width must be > 0");
                 },
                 [](const TopHatKernel& k) {
                   if (!(k.scale >= 0.0)) throw ValidationError("kernel scale must be >= 0");
                   if (!(k.radius > 0.0 && k.radius < 0.5)) {
                     throw ValidationError("top-hat radius must lie in (0, 1/2)");
                   }
                 },
                 [](const MatrixKernel& k) {
                   if (k.dim < 1 || k.inv_mesh < 1) throw ValidationError("bad matrix kernel grid");
                   const double m = std::pow(k.inv_mesh, k.dim);
                   if (static_cast<double>(k.entries.size()) != m * m) {
                     throw ValidationError("matrix kernel must have (node count)^2 entries");
                   }
                   for (double v : k.entries) {
                     if (!(v >= 0.0) || !std::isfinite(v)) {
                       throw ValidationError("matrix kernel entries must be finite and >= 0");
                     }
                   }
                 }},
             kind);
}

}  // namespace

double Modulation::operator()(double t) const {
  if (amplitude == 0.0) return 1.0;
  const double s = std::sin(std::numbers::pi * t / period);
  return 1.0 - amplitude * s * s;
}

double KernelRows::row_sum(NodeIndex x) const {
  double s = 0.0;
  for (double v : row_vals(x)) s += v;
  return s;
}

double KernelRows::entry(NodeIndex x, NodeIndex y) const {
  const auto c = row_cols(x);
  const auto v = row_vals(x);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == y) return v[i];
  }
  return 0.0;
}

void KernelRows::apply(std::span<const double> f, std::span<double> out, double scale) const {
  if (f.size() != size || out.size() != size) throw DimensionError("kernel apply size mismatch");
  for (NodeIndex x = 0; x < size; ++x) {
    double acc = 0.0;
    for (std::size_t i = row_start[x]; i < row_start[x + 1]; ++i) acc += vals[i] * f[cols[i]];
    out[x] = scale * acc;
  }
}

KernelRows KernelRows::transposed() const {
  KernelRows t;
  t.size = size;
  t.row_start.assign(size + 1, 0);
  for (NodeIndex c : cols) ++t.row_start[c + 1];
  for (std::size_t i = 0; i < size; ++i) t.row_start[i + 1] += t.row_start[i];
  t.cols.resize(cols.size());
  t.vals.resize(vals.size());
  std::vector<std::size_t> fill(t.row_start.begin(), t.row_start.end() - 1);
  for (NodeIndex x = 0; x < size; ++x) {
    for (std::size_t i = row_start[x]; i < row_start[x + 1]; ++i) {
      const std::size_t slot = fill[cols[i]]++;
      t.cols[slot] = x;
      t.vals[slot] = vals[i];
    }
  }
  return t;
}

ContactKernel::ContactKernel(KernelKind kind, double beta_star, Modulation modulation)
    : kind_(std::move(kind)), beta_star_(beta_star), modulation_(modulation) {
  validate_kind(kind_);
  if (!(beta_star >= 0.0) || !std::isfinite(beta_star)) {
    throw ValidationError("beta_star must be finite and >= 0");
  }
  if (!(modulation_.amplitude >= 0.0 && modulation_.amplitude <= 1.0)) {
    throw ValidationError("modulation amplitude must lie in [0,1] so that m(t) <= 1");
  }
  if (!(modulation_.period > 0.0)) throw ValidationError("modulation period must be > 0");
  const double mass = kind_scale(kind_);
  if (mass > beta_star_ * (1.0 + kRowTolerance) + kRowTolerance) {
    throw ValidationError("contact kernel bound violated: row sum " + std::to_string(mass) +
                          " exceeds beta_star " + std::to_string(beta_star_));
  }
}

ContactKernel ContactKernel::with_default_bound(KernelKind kind, Modulation modulation) {
  validate_kind(kind);
  const double mass = kind_scale(kind);
  return ContactKernel(std::move(kind), mass, modulation);
}

std::string ContactKernel::kind_name() const {
  return std::visit(Overloaded{[](const LocalKernel&) { return "local"; },
                               [](const GaussianKernel&) { return "gaussian"; },
                               [](const TopHatKernel&) { return "top_hat"; },
                               [](const MatrixKernel&) { return "matrix"; }},
                    kind_);
}

bool ContactKernel::is_zero() const { return kind_scale(kind_) == 0.0; }

KernelRows ContactKernel::discretize_base(const TorusGrid& grid) const {
  const std::size_t m = grid.node_count();
  const int d = grid.dim();
  const double eps = grid.mesh();
  KernelRows rows;
  rows.size = m;
  rows.row_start.reserve(m + 1);
  rows.row_start.push_back(0);

  auto push_dense = [&](auto&& entry) {
    for (NodeIndex x = 0; x < m; ++x) {
      for (NodeIndex y = 0; y < m; ++y) {
        const double v = entry(x, y);
        if (v > 0.0) {
          rows.cols.push_back(y);
          rows.vals.push_back(v);
        }
      }
      rows.row_start.push_back(rows.cols.size());
    }
  };

  // Separable translation-invariant kinds: per-axis cell masses by offset.
  auto separable = [&](double scale, auto&& axis_mass) {
    const int n = grid.inv_mesh();
    std::vector<double> by_offset(n);
    for (int o = 0; o < n; ++o) by_offset[o] = axis_mass(0.0, o * eps, 0.5 * eps);
    push_dense([&](NodeIndex x, NodeIndex y) {
      const auto cx = grid.coords(x);
      const auto cy = grid.coords(y);
      double v = scale;
      for (int a = 0; a < d; ++a) v *= by_offset[((cy[a] - cx[a]) % n + n) % n];
      return v;
    });
  };

  std::visit(Overloaded{
                 [&](const LocalKernel& k) {
                   for (NodeIndex x = 0; x < m; ++x) {
                     if (k.scale > 0.0) {
                       rows.cols.push_back(x);
                       rows.vals.push_back(k.scale);
                     }
                     rows.row_start.push_back(rows.cols.size());
                   }
                 },
                 [&](const GaussianKernel& k) {
                   separable(k.scale, [&](double x, double c, double h) {
                     return gaussian_cell_mass(x, c, h, k.sigma);
                   });
                 },
                 [&](const TopHatKernel& k) {
                   separable(k.scale, [&](double x, double c, double h) {
                     return box_cell_mass(x, c, h, k.radius);
                   });
                 },
                 [&](const MatrixKernel& k) {
                   if (k.dim != d || k.inv_mesh != grid.inv_mesh()) {
                     throw DimensionError("matrix kernel was built for a different grid");
                   }
                   push_dense([&](NodeIndex x, NodeIndex y) { return k.entries[x * m + y]; });
                 }},
             kind_);

  for (NodeIndex x = 0; x < m; ++x) {
    const double s = rows.row_sum(x);
    if (s > beta_star_ + kRowTolerance) {
      throw ValidationError("contact kernel bound violated: row sum " + std::to_string(s) +
                            " exceeds beta_star " + std::to_string(beta_star_));
    }
  }
  return rows;
}

std::vector<double> ContactKernel::spectral_multiplier(const SpectralLayout& layout) const {
  std::vector<double> out(layout.size(), 0.0);
  const int d = layout.dim();
  std::visit(Overloaded{
                 [&](const LocalKernel& k) { std::fill(out.begin(), out.end(), k.scale); },
                 [&](const GaussianKernel& k) {
                   const double c = 2.0 * std::numbers::pi * std::numbers::pi * k.sigma * k.sigma;
                   for (std::size_t i = 0; i < out.size(); ++i) {
                     double k2 = 0.0;
                     for (int a = 0; a < d; ++a) {
                       const double w = layout.wavenumber(i, a);
                       k2 += w * w;
                     }
                     out[i] = k.scale * std::exp(-c * k2);
                   }
                 },
                 [&](const TopHatKernel& k) {
                   for (std::size_t i = 0; i < out.size(); ++i) {
                     double v = k.scale;
                     for (int a = 0; a < d; ++a) {
                       v *= sinc(2.0 * std::numbers::pi * layout.wavenumber(i, a) * k.radius);
                     }
                     out[i] = v;
                   }
                 },
                 [&](const MatrixKernel&) {
                   throw ValidationError(
                       "matrix contact kernels have no continuum form; use a "
                       "translation-invariant kernel for the continuum solver");
                 }},
             kind_);
  return out;
}

KernelRows discretize_kernel(const ContactKernel& kernel, const TorusGrid& grid, double t) {
  KernelRows rows = kernel.discretize_base(grid);
  const double m = kernel.modulation()(t);
  if (m != 1.0) {
    for (double& v : rows.vals) v *= m;
  }
  return rows;
}

}  // namespace epigrid
