#pragma once

// Independent reference implementations used only by the tests. None of them
// calls into the library's numerical code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix identity(std::size_t n) {
  Matrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Dense generator ν/ε²·(stencil) of the nearest-neighbor walk on the d-torus
// with n points per axis, row-major node order (first axis slowest).
inline Matrix walk_generator(int d, int n, double nu) {
  std::size_t m = 1;
  for (int a = 0; a < d; ++a) m *= n;
  Matrix g(m, std::vector<double>(m, 0.0));
  const double rate = nu * n * n;
  for (std::size_t x = 0; x < m; ++x) {
    std::vector<int> c(d);
    std::size_t r = x;
    for (int a = d - 1; a >= 0; --a) {
      c[a] = static_cast<int>(r % n);
      r /= n;
    }
    for (int a = 0; a < d; ++a) {
      for (int step : {-1, 1}) {
        auto cc = c;
        cc[a] = (cc[a] + step + n) % n;
        std::size_t y = 0;
        for (int b = 0; b < d; ++b) y = y * n + cc[b];
        g[x][y] += rate;
        g[x][x] -= rate;
      }
    }
  }
  return g;
}

// Matrix exponential by scaling and squaring of a degree-20 Taylor polynomial.
inline Matrix expm(const Matrix& a) {
  const std::size_t n = a.size();
  double norm = 0.0;
  for (const auto& row : a) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    norm = std::max(norm, s);
  }
  int squarings = 0;
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  Matrix as = a;
  for (auto& row : as)
    for (double& v : row) v *= scale;
  Matrix result = identity(n);
  Matrix term = identity(n);
  for (int k = 1; k <= 20; ++k) {
    term = multiply(term, as);
    for (auto& row : term)
      for (double& v : row) v /= k;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) result[i][j] += term[i][j];
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

// Well-mixed SI renewal system, γ = 0, local kernel of mass b:
//   S' = -f, I' = f, f = b·S·F, F(t) = λ̄0(t)I0 + ∫ λ̄(t-s) f(s) ds.
// Explicit predictor-corrector in time, trapezoid history sum.
struct ScalarSolution {
  std::vector<double> s, i, f;
};

inline ScalarSolution scalar_volterra(double s0, double i0, double b, double horizon, double k,
                                      const std::function<double(double)>& lam,
                                      const std::function<double(double)>& lam0) {
  const auto n = static_cast<std::size_t>(std::llround(horizon / k));
  ScalarSolution o{{s0}, {i0}, {lam0(0.0) * i0}};
  std::vector<double> flux{b * s0 * o.f[0]};
  for (std::size_t m = 0; m < n; ++m) {
    const double t1 = static_cast<double>(m + 1) * k;
    auto force = [&](double flux_end) {
      double acc = lam0(t1) * i0;
      for (std::size_t j = 0; j <= m; ++j) {
        acc += (j == 0 ? 0.5 : 1.0) * k * lam(t1 - static_cast<double>(j) * k) * flux[j];
      }
      return acc + 0.5 * k * lam(0.0) * flux_end;
    };
    const double s_pred = o.s[m] - k * flux[m];
    const double f_pred = b * s_pred * force(flux[m]);
    const double s1 = o.s[m] - 0.5 * k * (flux[m] + f_pred);
    const double i1 = o.i[m] + 0.5 * k * (flux[m] + f_pred);
    const double force1 = force(f_pred);
    o.s.push_back(s1);
    o.i.push_back(i1);
    o.f.push_back(force1);
    flux.push_back(b * s1 * force1);
  }
  return o;
}

// Textbook Gillespie simulation of the closed Markov SI epidemic in one
// well-mixed population of n_total = s + i: infection rate b·λ·S·I/n_total.
struct GillespieOutcome {
  double first_infection_time;  // +inf if none before the horizon
  std::int64_t final_infected;
};

inline GillespieOutcome gillespie_si(std::int64_t s, std::int64_t i, double b, double lambda,
                                     double horizon, std::mt19937_64& rng) {
  const double n = static_cast<double>(s + i);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double t = 0.0;
  GillespieOutcome out{std::numeric_limits<double>::infinity(), i};
  while (s > 0) {
    const double rate = b * lambda * static_cast<double>(s) * static_cast<double>(i) / n;
    if (rate <= 0.0) break;
    t += -std::log(1.0 - u(rng)) / rate;
    if (t > horizon) break;
    if (!std::isfinite(out.first_infection_time)) out.first_infection_time = t;
    --s;
    ++i;
  }
  out.final_infected = i;
  return out;
}

}  // namespace oracle
