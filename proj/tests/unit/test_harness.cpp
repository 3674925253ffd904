#include <atomic>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "epigrid/errors.hpp"
#include "epigrid/harness/harness.hpp"
#include "epigrid/rng.hpp"
#include "epigrid/sim/simulator.hpp"

using namespace epigrid;

namespace {

ModelSpec small_model() {
  ModelSpec m;
  const auto [sd, id] = density_preset("cosine", 1);
  m.s0 = sd;
  m.i0 = id;
  m.params = ModelParams{0.02, 0.02, 0.5, 0.5};
  m.kernel = ContactKernel::with_default_bound(GaussianKernel{2.0, 0.1});
  m.law = InfectivityLaw::with_default_bound(Trapezoid{1.0, 0.1, 0.1, 0.3, 0.2});
  m.initial_law = m.law.with_age_shift(0.1);
  m.step = 0.0125;
  m.output_dt = 0.0625;
  return m;
}

ExperimentPlan plan_of(ExperimentKind kind, std::vector<ScheduleEntry> entries) {
  ExperimentPlan p;
  p.kind = kind;
  p.model = small_model();
  p.entries = std::move(entries);
  p.master_seed = 5;
  if (kind == ExperimentKind::f0_lemma) p.model.kernel = ContactKernel(LocalKernel{0.0}, 1.0);
  return p;
}

}  // namespace

TEST_CASE("parallel_for runs every index once and reports the first failure") {
  for (int threads : {1, 3}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, threads, [&](std::size_t k) { ++hits[k]; });
    for (auto& h : hits) CHECK(h == 1);
  }
  try {
    parallel_for(20, 1, [](std::size_t k) {
      if (k >= 7) throw NumericalError("index " + std::to_string(k));
    });
    FAIL("expected a throw");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()) == "index 7");
  }
  CHECK_THROWS_AS(parallel_for(20, 4, [](std::size_t k) { if (k == 11) throw InvariantViolation("x"); }),
                  InvariantViolation);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("plan validation") {
  CHECK_NOTHROW(plan_of(ExperimentKind::lln_fixed_eps, {{20, 4, 30}, {40, 4, 30}}).validate());
  CHECK_THROWS_AS(plan_of(ExperimentKind::lln_fixed_eps, {}).validate(), ValidationError);
  CHECK_THROWS_AS(plan_of(ExperimentKind::lln_fixed_eps, {{20, 4, 30}, {40, 8, 30}}).validate(), ValidationError);
  CHECK_THROWS_AS(plan_of(ExperimentKind::lln_fixed_eps, {{40, 4, 30}, {20, 4, 30}}).validate(), ValidationError);
  CHECK_THROWS_AS(plan_of(ExperimentKind::lln_fixed_eps, {{20, 4, 29}}).validate(), ValidationError);
  CHECK_THROWS_AS(plan_of(ExperimentKind::eps_limit, {{0, 8, 0}, {0, 4, 0}}).validate(), ValidationError);
  CHECK_THROWS_AS(plan_of(ExperimentKind::eps_limit, {{0, 4, 5}}).validate(), ValidationError);
  // N·ε^d = 100, 100: not strictly increasing.
  CHECK_THROWS_AS(plan_of(ExperimentKind::joint_limit, {{400, 4, 30}, {800, 8, 30}}).validate(), ValidationError);
  CHECK_NOTHROW(plan_of(ExperimentKind::joint_limit, {{400, 4, 30}, {1600, 8, 30}}).validate());
  auto f0 = plan_of(ExperimentKind::f0_lemma, {{20, 4, 30}});
  CHECK_NOTHROW(f0.validate());
  f0.model.kernel = ContactKernel::with_default_bound(LocalKernel{1.0});
  CHECK_THROWS_AS(f0.validate(), ValidationError);
  auto off = plan_of(ExperimentKind::lln_fixed_eps, {{20, 4, 30}});
  off.model.output_dt = 0.05;  // probes at multiples of T/8 fall off this grid
  CHECK_THROWS_AS(off.validate(), ValidationError);
  CHECK(experiment_kind_from_string("joint_limit") == ExperimentKind::joint_limit);
  CHECK_THROWS_AS(experiment_kind_from_string("bogus"), ValidationError);
}

TEST_CASE("single-entry schedules are flagged and carry no rate") {
  for (auto kind : {ExperimentKind::lln_fixed_eps, ExperimentKind::joint_limit}) {
    const auto rep = run_experiment(plan_of(kind, {{20, 4, 30}}));
    CHECK(rep.fits.empty());
    REQUIRE(rep.flags.size() == 1);
    CHECK(rep.flags[0].find("single schedule entry") != std::string::npos);
    CHECK(rep.entries.size() == 1);
    CHECK(rep.entries[0].stats[0].replicates == 30);
    CHECK(rep.entries[0].stats[0].standard_error > 0.0);
  }
}

TEST_CASE("reports are identical across thread counts") {
  auto plan = plan_of(ExperimentKind::lln_fixed_eps, {{20, 4, 30}, {80, 4, 30}});
  plan.threads = 1;
  const auto a = run_experiment(plan);
  plan.threads = 3;
  const auto b = run_experiment(plan);
  CHECK(a.to_json().dump() == b.to_json().dump());
  std::ostringstream ca, cb;
  a.write_csv(ca);
  b.write_csv(cb);
  CHECK(ca.str() == cb.str());
  plan.master_seed = 6;
  CHECK(run_experiment(plan).to_json().dump() != a.to_json().dump());
}

TEST_CASE("tidy CSV and JSON layout") {
  const auto rep = run_experiment(plan_of(ExperimentKind::lln_fixed_eps, {{20, 4, 30}, {80, 4, 30}}));
  std::ostringstream out;
  rep.write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "entry,N,eps,N_eps_d,field,norm,mean,stderr");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
    ++rows;
  }
  // SI, S, I, F max and nine probes per entry.
  CHECK(rows == 2 * 13);
  const auto j = rep.to_json();
  CHECK(j["kind"] == "lln_fixed_eps");
  CHECK(j["entries"].size() == 2);
  CHECK(j["entries"][1]["N_eps_d"] == 20.0);
  CHECK(j["fits"].size() == 1);
  CHECK(j["fits"][0]["axis"] == "N");
  CHECK(rep.entries[0].stat("F", "sup_x_t=0.25").replicates == 30);
  CHECK_THROWS_AS(rep.entries[0].stat("F", "nope"), DomainError);
}

TEST_CASE("deterministic eps limit decreases") {
  auto plan = plan_of(ExperimentKind::eps_limit, {{0, 4, 0}, {0, 8, 0}, {0, 16, 0}});
  const auto rep = run_experiment(plan);
  CHECK(rep.passed() == (rep.fits.at(0).rate >= 1.7 && rep.fits.at(0).rate <= 2.3));
  const auto* dec = rep.check("SI sup_t_sup_x_max strictly decreasing");
  REQUIRE(dec != nullptr);
  CHECK(dec->passed);
  for (const auto& e : rep.entries) CHECK(e.stats[0].replicates == 0);
}

TEST_CASE("joint report carries the error decomposition") {
  const auto rep = run_experiment(plan_of(ExperimentKind::joint_limit, {{64, 4, 30}, {512, 8, 30}}));
  REQUIRE(rep.entries.size() == 2);
  for (const auto& e : rep.entries) {
    const double total = e.stat("SI", "sup_t_sum_sup_x").mean;
    const double sp = e.stat("SI", "vs_patch_sup_t_sum_sup_x").mean;
    const double pp = e.stat("SI", "patch_vs_pde_sup_t_sum_sup_x").mean;
    // Holds replicate by replicate, hence for the means too.
    CHECK(std::abs(total - sp) <= pp + 1e-12);
  }
  CHECK(rep.check("entry 0 error decomposition")->passed);
  REQUIRE(rep.fits.size() == 1);
  CHECK(rep.fits[0].axis == "composite");
}

TEST_CASE("initial-cohort check") {
  SUBCASE("no initial infectivity gives zero error") {
    auto plan = plan_of(ExperimentKind::f0_lemma, {{20, 4, 30}, {40, 4, 30}});
    plan.model.initial_law = InfectivityLaw(FixedDeath{0.0, 1.0}, 1.0);
    const auto rep = run_experiment(plan);
    for (const auto& e : rep.entries)
      for (const auto& s : e.stats) CHECK(s.mean == 0.0);
    CHECK(rep.fits.empty());
    CHECK_FALSE(rep.flags.empty());
  }
  SUBCASE("at t = 0 only the initial placement fluctuates") {
    auto plan = plan_of(ExperimentKind::f0_lemma, {{50, 4, 30}});
    plan.model.initial_law = InfectivityLaw(FixedDeath{1.0, 10.0}, 1.0);
    const auto rep = run_experiment(plan);
    const Field i_bar = patch_initial_condition(plan.model.s0, plan.model.i0, TorusGrid(1, 4)).i_bar;
    std::vector<double> sq;
    for (int r = 0; r < 30; ++r) {
      Rng rng = make_rng(derive_seed(plan.master_seed, 0, r));
      const auto ic = build_initial_condition(plan.model.s0, plan.model.i0, TorusGrid(1, 4), 50, rng);
      double m = 0.0;
      for (std::size_t x = 0; x < 4; ++x) m = std::max(m, std::abs(static_cast<double>(ic.i_counts[x]) / 50 - i_bar[x]));
      sq.push_back(m * m);
    }
    CHECK(rep.entries[0].stat("F0", "mean_sq_sup_x_t=0").mean == doctest::Approx(mean_stderr(sq).mean).epsilon(1e-12));
  }
}
