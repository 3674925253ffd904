#include "epigrid/solver/mild.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epigrid/errors.hpp"
#include "epigrid/grid/fft.hpp"
#include "epigrid/simd/kernels.hpp"

namespace epigrid {

namespace {

double* raw(std::vector<Complex>& v) { return reinterpret_cast<double*>(v.data()); }
const double* raw(const std::vector<Complex>& v) { return reinterpret_cast<const double*>(v.data()); }

double sup_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Spectral bookkeeping shared by both backends.
class Workspace {
 public:
  Workspace(const MildProblem& p, std::size_t steps)
      : p_(p), fft_(thread_fft(p.dims)), h_(p.step), half_(fft_.layout().size()) {
    const std::size_t real = fft_.layout().real_size();
    if (p.mu_s.size() != half_ || p.mu_i.size() != half_) {
      throw DimensionError("spectrum size does not match the grid");
    }
    if (p.s0.size() != real || p.i0.size() != real) {
      throw DimensionError("initial fields do not match the grid");
    }
    step_s_ = duplicated(p.mu_s, h_);
    step_i_ = duplicated(p.mu_i, h_);
    lag_i_.resize(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) lag_i_[j] = duplicated(p.mu_i, static_cast<double>(j) * h_);
    lam_.resize(steps + 1);
    lam0_.resize(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) {
      lam_[j] = p.lambda_bar(static_cast<double>(j) * h_);
      lam0_[j] = p.lambda_bar0(static_cast<double>(j) * h_);
    }
    i0_hat_ = forward(p.i0);
  }

  std::size_t half() const { return half_; }
  std::size_t real() const { return fft_.layout().real_size(); }
  double lam(std::size_t lag) const { return lam_[lag]; }

  std::vector<Complex> forward(std::span<const double> x) {
    std::vector<Complex> out(half_);
    fft_.forward(x, out);
    return out;
  }
  Field inverse(const std::vector<Complex>& x) {
    Field out(real());
    fft_.inverse(x, out);
    return out;
  }

  // e^{hμ}(x + c·y), in place on x.
  void propagate(std::vector<Complex>& x, double c, const std::vector<Complex>& y, bool infected) {
    simd::active_kernels().axpy(c, raw(y), raw(x), 2 * half_);
    const auto& m = infected ? step_i_ : step_s_;
    simd::active_kernels().multiply_inplace(raw(x), m.data(), 2 * half_);
  }

  // F part at step n without its f_n endpoint term:
  // λ̄0(t_n)T(t_n)I0 + h Σ_{m<n} w_m λ̄(t_n - t_m) T(t_n - t_m) f_m, w_0 = 1/2.
  std::vector<Complex> force_history(std::size_t n, const std::vector<std::vector<Complex>>& f_hat) {
    std::vector<Complex> acc(half_, Complex(0.0, 0.0));
    const auto& k = simd::active_kernels();
    k.scaled_product_accumulate(lam0_[n], lag_i_[n].data(), raw(i0_hat_), raw(acc), 2 * half_);
    for (std::size_t m = 0; m < n; ++m) {
      const double w = (m == 0 ? 0.5 : 1.0) * h_ * lam_[n - m];
      if (w == 0.0) continue;
      k.scaled_product_accumulate(w, lag_i_[n - m].data(), raw(f_hat[m]), raw(acc), 2 * half_);
    }
    return acc;
  }

 private:
  std::vector<double> duplicated(const std::vector<double>& mu, double t) const {
    std::vector<double> out(2 * mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) out[2 * k] = out[2 * k + 1] = std::exp(mu[k] * t);
    return out;
  }

  const MildProblem& p_;
  RealFft& fft_;
  double h_;
  std::size_t half_;
  std::vector<double> step_s_, step_i_;
  std::vector<std::vector<double>> lag_i_;
  std::vector<double> lam_, lam0_;
  std::vector<Complex> i0_hat_;
};

void check_nonnegative(const MildProblem& p, double t, std::span<const double> s,
                       std::span<const double> i) {
  const double lo = std::min(*std::min_element(s.begin(), s.end()),
                             *std::min_element(i.begin(), i.end()));
  if (lo < -p.negativity_tol) {
    throw NumericalError("field undershoot " + std::to_string(lo) + " at t=" + std::to_string(t) +
                         "; try halving the step h");
  }
  if (!std::isfinite(lo)) throw NumericalError("non-finite field at t=" + std::to_string(t));
}

void init_trajectory(MildTrajectory& tr, const MildProblem& p, std::size_t steps) {
  tr.times.resize(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) tr.times[n] = static_cast<double>(n) * p.step;
  tr.times.back() = p.horizon;
  tr.s.resize(steps + 1);
  tr.i.resize(steps + 1);
  tr.f.resize(steps + 1);
  tr.gamma.resize(steps + 1);
  tr.flux.resize(steps + 1);
}

}  // namespace

std::size_t step_count(double horizon, double step) {
  if (!(step > 0.0) || !(horizon > 0.0)) throw ValidationError("horizon and step must be positive");
  const double ratio = horizon / step;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    throw ValidationError("step h must divide the horizon T");
  }
  return n;
}

MildTrajectory march_mild(const MildProblem& p) {
  const std::size_t steps = step_count(p.horizon, p.step);
  Workspace ws(p, steps);
  const std::size_t m = ws.real();
  const double h = p.step;
  MildTrajectory tr;
  init_trajectory(tr, p, steps);

  tr.s[0] = p.s0;
  tr.i[0] = p.i0;
  tr.f[0] = p.i0;
  for (double& v : tr.f[0]) v *= p.lambda_bar0(0.0);
  tr.flux[0].assign(m, 0.0);
  tr.gamma[0].assign(m, 0.0);
  p.flux(0.0, tr.s[0], tr.i[0], tr.f[0], tr.flux[0], tr.gamma[0]);
  check_nonnegative(p, 0.0, tr.s[0], tr.i[0]);

  std::vector<std::vector<Complex>> f_hat;
  f_hat.reserve(steps + 1);
  f_hat.push_back(ws.forward(tr.flux[0]));
  std::vector<Complex> s_hat = ws.forward(p.s0);
  std::vector<Complex> i_hat = ws.forward(p.i0);
  const double lam_zero = ws.lam(0);

  Field flux_new(m), gamma(m);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = tr.times[n + 1];
    ws.propagate(s_hat, -0.5 * h, f_hat[n], false);
    ws.propagate(i_hat, 0.5 * h, f_hat[n], true);
    const Field s_star = ws.inverse(s_hat);
    const Field i_star = ws.inverse(i_hat);
    const Field f_part = ws.inverse(ws.force_history(n + 1, f_hat));

    Field guess = tr.flux[n];
    Field s(m), i(m), f(m);
    auto fill = [&](const Field& q) {
      for (std::size_t x = 0; x < m; ++x) {
        s[x] = s_star[x] - 0.5 * h * q[x];
        i[x] = i_star[x] + 0.5 * h * q[x];
        f[x] = f_part[x] + 0.5 * h * lam_zero * q[x];
      }
    };
    int iter = 0;
    for (;; ++iter) {
      if (iter >= p.max_fixed_point_iters) {
        throw NumericalError("implicit step did not converge at t=" + std::to_string(t) +
                             "; try halving the step h");
      }
      fill(guess);
      p.flux(t, s, i, f, flux_new, gamma);
      const double diff = simd::max_abs_diff(flux_new, guess);
      guess.swap(flux_new);
      if (!(diff <= p.fixed_point_tol * std::max(1.0, sup_norm(guess)))) {
        if (!std::isfinite(diff)) throw NumericalError("non-finite flux at t=" + std::to_string(t));
        continue;
      }
      break;
    }
    tr.max_inner_iterations = std::max(tr.max_inner_iterations, iter + 1);
    fill(guess);
    check_nonnegative(p, t, s, i);

    f_hat.push_back(ws.forward(guess));
    simd::axpy(-0.5 * h, {raw(f_hat.back()), 2 * ws.half()}, {raw(s_hat), 2 * ws.half()});
    simd::axpy(0.5 * h, {raw(f_hat.back()), 2 * ws.half()}, {raw(i_hat), 2 * ws.half()});
    tr.s[n + 1] = std::move(s);
    tr.i[n + 1] = std::move(i);
    tr.f[n + 1] = std::move(f);
    tr.flux[n + 1] = guess;
    tr.gamma[n + 1] = gamma;
  }
  return tr;
}

PicardReport picard_mild(const MildProblem& p, int max_iters, double tol) {
  const std::size_t steps = step_count(p.horizon, p.step);
  Workspace ws(p, steps);
  const std::size_t m = ws.real();
  const double h = p.step;
  const double lam_zero = ws.lam(0);
  PicardReport rep;
  MildTrajectory& tr = rep.trajectory;
  init_trajectory(tr, p, steps);

  std::vector<std::vector<Complex>> f_hat(steps + 1, std::vector<Complex>(ws.half()));
  std::vector<Field> flux(steps + 1, Field(m, 0.0));
  const std::vector<Complex> s0_hat = ws.forward(p.s0);
  const std::vector<Complex> i0_hat = ws.forward(p.i0);

  // Fields of the discrete system driven by the current flux iterate.
  auto fields_from_flux = [&](std::vector<Field>& s, std::vector<Field>& i, std::vector<Field>& f) {
    std::vector<Complex> s_hat = s0_hat, i_hat = i0_hat;
    s.assign(steps + 1, {});
    i.assign(steps + 1, {});
    f.assign(steps + 1, {});
    s[0] = p.s0;
    i[0] = p.i0;
    f[0] = p.i0;
    for (double& v : f[0]) v *= p.lambda_bar0(0.0);
    for (std::size_t n = 0; n < steps; ++n) {
      ws.propagate(s_hat, -0.5 * h, f_hat[n], false);
      ws.propagate(i_hat, 0.5 * h, f_hat[n], true);
      simd::axpy(-0.5 * h, {raw(f_hat[n + 1]), 2 * ws.half()}, {raw(s_hat), 2 * ws.half()});
      simd::axpy(0.5 * h, {raw(f_hat[n + 1]), 2 * ws.half()}, {raw(i_hat), 2 * ws.half()});
      s[n + 1] = ws.inverse(s_hat);
      i[n + 1] = ws.inverse(i_hat);
      std::vector<Complex> fh = ws.force_history(n + 1, f_hat);
      simd::axpy(0.5 * h * lam_zero, {raw(f_hat[n + 1]), 2 * ws.half()}, {raw(fh), 2 * ws.half()});
      f[n + 1] = ws.inverse(fh);
    }
  };

  std::vector<Field> s, i, f;
  fields_from_flux(s, i, f);
  std::vector<Field> gamma(steps + 1, Field(m, 0.0));
  for (int k = 1; k <= max_iters; ++k) {
    for (std::size_t n = 0; n <= steps; ++n) {
      p.flux(tr.times[n], s[n], i[n], f[n], flux[n], gamma[n]);
      f_hat[n] = ws.forward(flux[n]);
    }
    std::vector<Field> s_new, i_new, f_new;
    fields_from_flux(s_new, i_new, f_new);
    double res = 0.0;
    for (std::size_t n = 0; n <= steps; ++n) {
      res = std::max({res, simd::max_abs_diff(s_new[n], s[n]), simd::max_abs_diff(i_new[n], i[n]),
                      simd::max_abs_diff(f_new[n], f[n])});
    }
    if (!std::isfinite(res)) throw NumericalError("Picard iteration produced non-finite fields");
    rep.residuals.push_back(res);
    s.swap(s_new);
    i.swap(i_new);
    f.swap(f_new);
    rep.iterations = k;
    if (res < tol) {
      rep.converged = true;
      break;
    }
  }
  for (std::size_t n = 0; n <= steps; ++n) {
    p.flux(tr.times[n], s[n], i[n], f[n], flux[n], gamma[n]);
  }
  tr.s = std::move(s);
  tr.i = std::move(i);
  tr.f = std::move(f);
  tr.flux = std::move(flux);
  tr.gamma = std::move(gamma);
  return rep;
}

}  // namespace epigrid
