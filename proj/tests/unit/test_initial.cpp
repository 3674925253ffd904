#include <cmath>
#include <numeric>

#include "doctest.h"
#include "epigrid/errors.hpp"
#include "epigrid/model/initial_condition.hpp"

using namespace epigrid;

TEST_CASE("uniform initial condition") {
  const TorusGrid g(1, 4);
  Rng rng = make_rng(1);
  const auto ic = build_initial_condition(FourierDensity{0.9, {}}, FourierDensity{0.1, {}}, g, 100, rng);
  for (double v : ic.s_bar) CHECK(v == doctest::Approx(0.9));
  CHECK(ic.s_total == 360);
  CHECK(ic.i_total == 40);
  CHECK(std::accumulate(ic.s_counts.begin(), ic.s_counts.end(), std::int64_t{0}) == 360);
  CHECK(std::accumulate(ic.i_counts.begin(), ic.i_counts.end(), std::int64_t{0}) == 40);
}

TEST_CASE("patch averages sum to the node count and totals round within one") {
  Rng rng = make_rng(2);
  for (int d : {1, 2}) {
    for (int n : {3, 4, 7, 8}) {
      const TorusGrid g(d, n);
      const auto [s, i] = density_preset("cosine", d);
      for (std::int64_t big_n : {1, 17, 333}) {
        const auto ic = build_initial_condition(s, i, g, big_n, rng);
        double sum = 0.0, ss = 0.0, is = 0.0;
        for (std::size_t x = 0; x < g.node_count(); ++x) {
          sum += ic.s_bar[x] + ic.i_bar[x];
          ss += ic.s_bar[x];
          is += ic.i_bar[x];
        }
        CHECK(sum == doctest::Approx(static_cast<double>(g.node_count())).epsilon(1e-12));
        CHECK(std::abs(static_cast<double>(ic.s_total) - big_n * ss) <= 1.0);
        CHECK(std::abs(static_cast<double>(ic.i_total) - big_n * is) <= 1.0);
        CHECK(ic.population() == big_n * static_cast<std::int64_t>(g.node_count()));
      }
    }
  }
}

TEST_CASE("largest-remainder rounding") {
  CHECK(round_totals(359.6, 40.4) == std::pair<std::int64_t, std::int64_t>{360, 40});
  CHECK(round_totals(359.4, 40.6) == std::pair<std::int64_t, std::int64_t>{359, 41});
  CHECK(round_totals(10.5, 9.5) == std::pair<std::int64_t, std::int64_t>{11, 9});
  CHECK(round_totals(3.0, 5.0) == std::pair<std::int64_t, std::int64_t>{3, 5});
}

TEST_CASE("placements follow the cell averages") {
  const TorusGrid g(1, 4);
  FourierDensity s{0.8, {}};
  FourierDensity i{0.2, {{{1}, 0.2, 0.0}}};  // ∝ 1 + cos(2πx)
  Rng rng = make_rng(3);
  const int draws = 1000;
  const std::int64_t n = 50;
  std::vector<double> freq(4, 0.0);
  std::int64_t total = 0;
  const Field i_bar = patch_initial_condition(s, i, g).i_bar;
  for (int k = 0; k < draws; ++k) {
    const auto ic = build_initial_condition(s, i, g, n, rng);
    for (int x = 0; x < 4; ++x) freq[x] += static_cast<double>(ic.i_counts[x]);
    total += ic.i_total;
  }
  const double isum = std::accumulate(i_bar.begin(), i_bar.end(), 0.0);
  for (int x = 0; x < 4; ++x) {
    const double p = i_bar[x] / isum;
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(total));
    CHECK(std::abs(freq[x] / static_cast<double>(total) - p) < 3 * se);
  }
}

TEST_CASE("density validation") {
  CHECK_NOTHROW(validate_densities(FourierDensity{0.9, {}}, FourierDensity{0.1, {}}, 1));
  CHECK_THROWS_AS(validate_densities(FourierDensity{0.9, {}}, FourierDensity{0.2, {}}, 1), ValidationError);
  CHECK_THROWS_AS(validate_densities(FourierDensity{0.5, {{{1}, 0.6, 0.0}}}, FourierDensity{0.5, {}}, 1),
                  ValidationError);
  CHECK_THROWS_AS(validate_densities(FourierDensity{0.9, {}}, FourierDensity{0.1, {{{1}, 0.2, 0.0}}}, 1),
                  ValidationError);
  for (const char* name : {"uniform", "cosine", "no_infection"}) {
    for (int d : {1, 2}) {
      const auto [s, i] = density_preset(name, d);
      CHECK_NOTHROW(validate_densities(s, i, d));
    }
  }
  CHECK_THROWS_AS(density_preset("nope", 1), ValidationError);
}
