#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "epigrid/errors.hpp"
#include "epigrid/solver/pde_solver.hpp"
#include "oracles/oracles.hpp"

using namespace epigrid;

namespace {

constexpr double kPi = std::numbers::pi;

PdeControls controls(int modes, double step) {
  PdeControls c;
  c.modes = modes;
  c.step = step;
  return c;
}

double sup_gap(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) m = std::max(m, std::abs(a[x] - b[x]));
  return m;
}

const InfectivityLaw kExp = InfectivityLaw::with_default_bound(ExponentialDeath{1.0, 1.0});
const InfectivityLaw kTrap = InfectivityLaw::with_default_bound(Trapezoid{1.0, 0.1, 0.2, 0.5, 0.3});
const ContactKernel kGauss = ContactKernel::with_default_bound(GaussianKernel{2.0, 0.15}, Modulation{0.3, 0.8});

ContinuumSolution typical(double h, int modes = 32) {
  const auto [sd, id] = density_preset("cosine", 1);
  return solve_pde_marching(sd, id, 1, ModelParams{0.02, 0.04, 0.5, 1.0}, kTrap, kTrap.with_age_shift(0.25),
                            kGauss, controls(modes, h));
}

}  // namespace

TEST_CASE("clamped nonlinearity on constant fields") {
  const auto k = ContactKernel::with_default_bound(LocalKernel{1.5});
  const ClampedNonlinearity nl({8}, k, 2.0, 0.5, 3.0, 0.25);
  const Field s(8, 0.6), i(8, 0.4), f(8, 0.8);
  for (double v : apply_H(nl, s, i, f, 0.0)) CHECK(v == doctest::Approx(0.6 * 1.5 * 0.8));

  // Every clamp active at once.
  const Field s2(8, 5.0), i2(8, -4.99), f2(8, 100.0);
  const double b = std::max(0.01, 0.25);
  for (double v : apply_H(nl, s2, i2, f2, 0.0)) {
    CHECK(v == doctest::Approx(3.0 * 1.5 * 2.0 * 3.0 / std::sqrt(b)));
  }
  const Field s3(8, -0.2);
  for (double v : apply_H(nl, s3, i, f, 0.0)) CHECK(v == 0.0);
  const Field f3(8, -1.0);
  for (double v : apply_H(nl, s, i, f3, 0.0)) CHECK(v == 0.0);

  ClampStats st;
  Field out(8);
  nl.apply(0.0, s2, i2, f2, out, {}, &st);
  CHECK(st.evaluations == 8);
  CHECK(st.s_above == 8);
  CHECK(st.b_below == 8);
  CHECK(st.f_above == 8);
  CHECK(st.s_negative == 0);
  CHECK(nl.output_bound() == doctest::Approx(3.0 * 2.0 * 3.0 * 1.5 / 0.5));
  CHECK_THROWS_AS(ClampedNonlinearity({8}, k, 1.0, 0.5, 0.0, 0.1), ValidationError);
}

TEST_CASE("clamped nonlinearity matches a direct convolution") {
  // Gaussian kernel sampled at grid offsets through its exact Fourier series.
  const int n = 16;
  const ClampedNonlinearity nl({n}, kGauss, 1.0, 0.7, 4.0, 0.2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Field s(n), i(n), f(n);
  for (int x = 0; x < n; ++x) {
    s[x] = u(rng);
    i[x] = u(rng);
    f[x] = u(rng);
  }
  const double t = 0.37;
  const double mod = 1.0 - 0.3 * std::pow(std::sin(kPi * t / 0.8), 2);
  const Field out = apply_H(nl, s, i, f, t);
  for (int x = 0; x < n; ++x) {
    double conv = 0.0;
    for (int y = 0; y < n; ++y) {
      // Kernel weight at offset (x - y)/n from its n-point trigonometric interpolant.
      double w = 0.0;
      for (int k = -n / 2; k <= n / 2; ++k) {
        const double c = (std::abs(k) == n / 2) ? 0.5 : 1.0;
        w += c * 2.0 * std::exp(-2.0 * kPi * kPi * 0.0225 * k * k) * std::cos(2.0 * kPi * k * (x - y) / n);
      }
      conv += w / n * f[y];
    }
    const double want = s[x] * mod * conv / std::pow(s[x] + i[x], 0.7);
    CHECK(std::abs(out[x] - want) < 1e-12);
  }
}

TEST_CASE("clamped nonlinearity is bounded and Lipschitz for arbitrary inputs") {
  const int n = 16;
  const ClampedNonlinearity nl({n}, kGauss, 1.5, 0.6, 2.0, 0.3);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 4.0);
  const double lip = nl.lipschitz();
  for (int trial = 0; trial < 500; ++trial) {
    Field s(n), i(n), f(n), s2(n), i2(n), f2(n);
    const double scale = trial % 2 == 0 ? 1.0 : 1e-3;
    for (int x = 0; x < n; ++x) {
      s[x] = u(rng);
      i[x] = u(rng);
      f[x] = u(rng);
      s2[x] = s[x] + scale * u(rng);
      i2[x] = i[x] + scale * u(rng);
      f2[x] = f[x] + scale * u(rng);
    }
    const double t = 0.1 * trial;
    const Field a = apply_H(nl, s, i, f, t), b = apply_H(nl, s2, i2, f2, t);
    const double din = std::max({sup_gap(s, s2), sup_gap(i, i2), sup_gap(f, f2)});
    CHECK(sup_gap(a, b) <= lip * din * (1 + 1e-12));
    for (double v : a) CHECK(std::abs(v) <= nl.output_bound() * (1 + 1e-12));
  }
}

TEST_CASE("without infection the continuum fields are exact heat flow") {
  auto [sd, id] = density_preset("no_infection", 1);
  sd.terms.push_back({{1}, 0.2, 0.0});
  sd.terms.push_back({{3}, 0.0, 0.1});
  const double nu = 0.03;
  const auto sol = solve_pde_marching(sd, id, 1, ModelParams{nu, 0.05, 0.5, 1.0}, kExp, kExp, kGauss,
                                      controls(16, 0.05));
  for (std::size_t n = 0; n < sol.times().size(); n += 5) {
    const double t = sol.times()[n];
    Field want(16);
    for (int m = 0; m < 16; ++m) {
      const double x = m / 16.0;
      want[m] = 1.0 + 0.2 * std::exp(-4 * kPi * kPi * nu * t) * std::cos(2 * kPi * x) +
                0.1 * std::exp(-36 * kPi * kPi * nu * t) * std::sin(6 * kPi * x);
    }
    CHECK(sup_gap(sol.trajectory.s[n], want) < 1e-10);
    for (double v : sol.trajectory.i[n]) CHECK(v == 0.0);
  }
  CHECK(sol.clamps.total() == 0);
}

TEST_CASE("well-mixed continuum data reduce to the scalar renewal system") {
  const double h = 0.0025, b = 2.0;
  const auto sol = solve_pde_marching(FourierDensity{0.9, {}}, FourierDensity{0.1, {}}, 2,
                                      ModelParams{0.05, 0.02, 0.3, 1.0}, kExp, kExp,
                                      ContactKernel::with_default_bound(LocalKernel{b}), controls(8, h));
  const auto lam = [](double t) { return std::exp(-t); };
  const auto ref = oracle::scalar_volterra(0.9, 0.1, b, 1.0, h / 4, lam, lam);
  double err = 0.0;
  for (std::size_t n = 0; n < sol.times().size(); ++n) {
    for (double v : sol.trajectory.s[n]) err = std::max(err, std::abs(v - ref.s[4 * n]));
    for (double v : sol.trajectory.i[n]) err = std::max(err, std::abs(v - ref.i[4 * n]));
    for (double v : sol.trajectory.f[n]) err = std::max(err, std::abs(v - ref.f[4 * n]));
  }
  CHECK(err < 1e-6);
}

TEST_CASE("continuum time discretization is second order") {
  const auto a = typical(0.04), b = typical(0.02), c = typical(0.01);
  double d1 = 0.0, d2 = 0.0;
  for (const char* f : {"S", "I", "F"}) {
    const auto fa = a.spectral(f, a.times().size() - 1).to_samples();
    const auto fb = b.spectral(f, b.times().size() - 1).to_samples();
    const auto fc = c.spectral(f, c.times().size() - 1).to_samples();
    d1 = std::max(d1, sup_gap(fa, fb));
    d2 = std::max(d2, sup_gap(fb, fc));
  }
  CHECK(std::log2(d1 / d2) >= 1.8);
  CHECK(c.clamps.total() == 0);
}

TEST_CASE("Picard iteration solves the same discrete system") {
  const auto [sd, id] = density_preset("cosine", 1);
  const ModelParams p{0.02, 0.04, 0.5, 1.0};
  const auto march = typical(0.02);
  const auto pic = solve_pde_picard(sd, id, 1, p, kTrap, kTrap.with_age_shift(0.25), kGauss,
                                    controls(32, 0.02), 100, 1e-13);
  CHECK(pic.picard_converged);
  double gap = 0.0;
  for (std::size_t n = 0; n < march.times().size(); ++n) {
    gap = std::max({gap, sup_gap(march.trajectory.s[n], pic.trajectory.s[n]),
                    sup_gap(march.trajectory.i[n], pic.trajectory.i[n]),
                    sup_gap(march.trajectory.f[n], pic.trajectory.f[n])});
  }
  CHECK(gap < 1e-10);
  // Residuals fall off once the iteration has propagated across the horizon.
  const auto& r = pic.picard_residuals;
  REQUIRE(r.size() >= 4);
  for (std::size_t k = 2; k < r.size(); ++k) CHECK(r[k] < r[k - 1]);
  CHECK(r.back() <= 1e-13);

  CHECK_THROWS_AS(solve_pde_picard(sd, id, 1, p, kTrap, kTrap, kGauss, controls(32, 0.02), 2, 1e-13),
                  NumericalError);
}

TEST_CASE("Picard converges at once without infection") {
  const auto [sd, id] = density_preset("no_infection", 2);
  const auto sol = solve_pde_picard(sd, id, 2, ModelParams{}, kExp, kExp, kGauss, controls(8, 0.1), 10, 1e-12);
  CHECK(sol.picard_iterations == 1);
}

TEST_CASE("patch and continuum comparison") {
  const auto [sd, id] = density_preset("cosine", 1);
  const ModelParams p{0.02, 0.04, 0.5, 1.0};
  const TorusGrid g(1, 8);
  const auto pde = typical(0.02);
  const auto patch = solve_patch_system(patch_initial_condition(sd, id, g), p, kTrap, kTrap.with_age_shift(0.25),
                                        kGauss, SolverControls{0.02});
  const auto rep = compare_patch_to_pde(patch, pde);
  CHECK(rep.times.size() == patch.times().size());
  CHECK(rep.error[0] < 1e-9);
  CHECK(rep.sup_error > 1e-4);
  CHECK(rep.sup_error == doctest::Approx(std::max({rep.sup_error_s, rep.sup_error_i, rep.sup_error_f})));

  const auto series = patch.series();
  const auto self = compare_series(series, series);
  CHECK(self.sup_error == 0.0);

  const auto short_patch = solve_patch_system(patch_initial_condition(sd, id, g), ModelParams{0.02, 0.04, 0.5, 0.5},
                                              kTrap, kTrap, kGauss, SolverControls{0.02});
  CHECK_THROWS_AS(compare_patch_to_pde(short_patch, pde), DomainError);
  const std::vector<double> off{0.013};
  CHECK_THROWS_AS(project_pde(g, pde, off), DomainError);
}

TEST_CASE("under-resolved initial data are rejected") {
  auto [sd, id] = density_preset("uniform", 1);
  sd.terms.push_back({{30}, 0.01, 0.0});
  CHECK_THROWS_AS(solve_pde_marching(sd, id, 1, ModelParams{}, kExp, kExp, kGauss, controls(64, 0.1)),
                  NumericalError);
  CHECK_NOTHROW(solve_pde_marching(sd, id, 1, ModelParams{}, kExp, kExp, kGauss, controls(128, 0.1)));
  CHECK_THROWS_AS(solve_pde_marching(sd, id, 1, ModelParams{}, kExp, kExp,
                                     ContactKernel::with_default_bound(MatrixKernel{1, 1, {1.0}}),
                                     controls(128, 0.1)),
                  ValidationError);
}

TEST_CASE("continuum series fields") {
  const auto sol = typical(0.05, 16);
  const auto s = sol.series(5);
  CHECK(s.layer == "pde");
  CHECK(s.point_count() == 16);
  CHECK(s.time_count() == 5);
  CHECK_THROWS_AS(sol.spectral("X", 0), DomainError);
}
