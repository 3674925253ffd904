#include <cmath>

#include "doctest.h"
#include "epigrid/errors.hpp"
#include "epigrid/model/infectivity.hpp"
#include "epigrid/model/params.hpp"

using namespace epigrid;

TEST_CASE("fixed-death trajectory") {
  const auto law = InfectivityLaw(FixedDeath{1.5, 2.0}, 1.5);
  Rng rng = make_rng(1);
  const Trajectory tr = sample_infectivity(law, rng);
  CHECK(tr(-0.1) == 0.0);
  CHECK(tr(0.0) == 1.5);
  CHECK(tr(1.999) == 1.5);
  CHECK(tr(2.0) == 0.0);
  CHECK(tr.end == 2.0);
  CHECK(mean_infectivity(law, 1.0) == 1.5);
  CHECK(mean_infectivity(law, 2.0) == 0.0);
}

TEST_CASE("exponential death: closed form and Monte Carlo mean") {
  const auto law = InfectivityLaw::with_default_bound(ExponentialDeath{1.0, 0.5});
  CHECK(mean_infectivity(law, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(mean_infectivity(law, -1.0) == 0.0);
  Rng rng = make_rng(2);
  const int n = 100000;
  for (double t : {0.5, 1.0, 3.0}) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += sample_infectivity(law, rng)(t);
    const double p = std::exp(-0.5 * t);
    CHECK(std::abs(sum / n - p) < 3 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("trapezoid samples stay below lambda_star and vanish after the ramp") {
  const Trapezoid tz{2.0, 0.5, 1.0, 2.0, 0.5};
  const auto law = InfectivityLaw::with_default_bound(tz);
  CHECK(law.lambda_star() == 2.0);
  Rng rng = make_rng(3);
  for (int k = 0; k < 2000; ++k) {
    const Trajectory tr = law.sample(rng);
    CHECK(tr.max_value() <= 2.0 + 1e-12);
    CHECK(tr.end <= 0.5 + 2.0 + 0.5 + 1e-12);
    CHECK(tr.end >= 0.5 + 1.0 + 0.5 - 1e-12);
    for (double a = 0.0; a < tr.end; a += 0.07) {
      CHECK(tr(a) >= 0.0);
      CHECK(tr(a) <= 2.0 + 1e-12);
    }
    CHECK(tr(tr.end) == 0.0);
    CHECK(tr(tr.end + 1.0) == 0.0);
  }
}

TEST_CASE("trapezoid mean: analytic against Monte Carlo") {
  // Plateau end uniform so that the ramp down starts uniformly in [1, 2].
  const Trapezoid tz{1.0, 0.25, 0.75, 1.75, 0.5};
  const auto law = InfectivityLaw::with_default_bound(tz);
  Rng rng = make_rng(4);
  const int n = 1000000;
  for (double t : {0.1, 1.5, 2.1}) {
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const double v = law.sample(rng)(t);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(sq / n - mean * mean, 1e-30) / n);
    CHECK(std::abs(law.mean(t) - mean) < 3 * se + 1e-10);
  }
}

TEST_CASE("means of constant-until-death laws are nonincreasing") {
  for (const auto& law : {InfectivityLaw::with_default_bound(ExponentialDeath{0.7, 2.0}),
                          InfectivityLaw::with_default_bound(FixedDeath{1.0, 1.3})}) {
    CHECK(law.monotone());
    double prev = law.mean(0.0);
    for (double t = 0.01; t < 4.0; t += 0.01) {
      const double m = law.mean(t);
      CHECK(m <= prev);
      prev = m;
    }
  }
  CHECK_FALSE(InfectivityLaw::with_default_bound(Trapezoid{1, 1, 1, 2, 1}).monotone());
}

TEST_CASE("age shift describes an epidemic already in progress") {
  const auto law = InfectivityLaw::with_default_bound(FixedDeath{1.0, 2.0}).with_age_shift(0.5);
  Rng rng = make_rng(5);
  const Trajectory tr = law.sample(rng);
  CHECK(tr(1.49) == 1.0);
  CHECK(tr(1.5) == 0.0);
  CHECK(law.mean(1.4) == 1.0);
  CHECK(law.mean(1.6) == 0.0);
  const auto ex = InfectivityLaw::with_default_bound(ExponentialDeath{1.0, 1.0}).with_age_shift(3.0);
  // Memoryless: the shifted law has the same mean shape up to the survival factor.
  CHECK(ex.mean(1.0) == doctest::Approx(std::exp(-4.0)));
}

TEST_CASE("custom sampler: Monte Carlo mean with standard error") {
  CustomLaw custom{[](Rng& r) {
                     Trajectory tr;
                     tr.segments = {{0.0, 1.0, -0.5}};
                     tr.end = 1.0 + uniform01(r);
                     return tr;
                   },
                   20000, 7};
  const InfectivityLaw law(custom, 1.0);
  const auto est = law.mean_with_error(0.5);
  CHECK(est.standard_error < 1e-12);  // every sample alive at 0.5
  CHECK(est.mean == doctest::Approx(0.75));
  const auto late = law.mean_with_error(1.5);
  // E[(1 - 0.75)·1{1.5 < 1 + U}] = 0.25·0.5
  CHECK(std::abs(late.mean - 0.125) < 4 * late.standard_error);
  CHECK(late.standard_error > 0.0);
  CHECK(law.mean(-1.0) == 0.0);

  CustomLaw tiny = custom;
  tiny.mc_samples = 10;
  CHECK_THROWS_AS(InfectivityLaw(tiny, 1.0).mean(0.5), EstimationError);
}

TEST_CASE("law validation") {
  CHECK_THROWS_AS(InfectivityLaw(ExponentialDeath{2.0, 1.0}, 1.0), ValidationError);
  CHECK_THROWS_AS(InfectivityLaw(FixedDeath{1.0, -1.0}, 1.0), ValidationError);
  CHECK_THROWS_AS(InfectivityLaw(ExponentialDeath{1.0, 1.0}, 0.0), ValidationError);
  CHECK_THROWS_AS(InfectivityLaw(Trapezoid{1, 1, 2, 1, 1}, 1.0), ValidationError);
}

TEST_CASE("model parameter validation") {
  ModelParams p;
  p.gamma = 1.5;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("[0,1]"), ValidationError);
  p.gamma = 1.0;
  CHECK_NOTHROW(p.validate());
  p.horizon = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.horizon = 1.0;
  p.nu_s = -0.1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
