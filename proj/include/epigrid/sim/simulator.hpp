#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "epigrid/field_series.hpp"
#include "epigrid/grid/torus_grid.hpp"
#include "epigrid/model/contact_kernel.hpp"
#include "epigrid/model/infectivity.hpp"
#include "epigrid/model/initial_condition.hpp"
#include "epigrid/model/params.hpp"
#include "epigrid/rng.hpp"

namespace epigrid {

struct SimulationSetup {
  TorusGrid grid{1, 8};
  ModelParams params;
  InfectivityLaw law = InfectivityLaw::with_default_bound(ExponentialDeath{1.0, 1.0});
  InfectivityLaw initial_law = law;
  ContactKernel kernel = ContactKernel::with_default_bound(LocalKernel{1.0});
  std::int64_t n_per_patch = 100;
  double output_dt = 0.1;
  /// Recount Σ_x B after every event (O(ε^{-d}) per event).
  bool full_invariant_check = true;
  std::ostream* event_log = nullptr;  // NDJSON, one line per event
};

struct EventCounts {
  std::uint64_t s_migrations = 0;
  std::uint64_t i_migrations = 0;
  std::uint64_t infections = 0;
  std::uint64_t rejections = 0;
  std::uint64_t breakpoints = 0;
  std::uint64_t invariant_checks = 0;

  std::uint64_t total() const { return s_migrations + i_migrations + infections + rejections; }
};

enum class EventKind { none, s_migration, i_migration, infection, rejection, breakpoint };

struct PressureField {
  Field gamma_bar;  // Γ̄(t,x)
  Field upsilon;    // Υ(t,x) = S·Γ̄
};

/// Direct evaluation of the force of infection on each susceptible and of the
/// total infection rate per node. `rows` must already include the modulation at t.
PressureField infection_pressure(std::span<const std::int64_t> s, std::span<const std::int64_t> i,
                                 std::span<const double> force, const KernelRows& rows,
                                 double gamma, std::int64_t n_per_patch);

/// Exact event-driven simulation of the patch model.
///
/// Migrations run as competing exponential clocks at the count level.
/// Infections are proposed per node at the dominating rate
/// S·λ*·Σ_y β^{x,y} I_active(y) / (N^{1-γ}B^γ) and accepted with probability
/// Υ/envelope. Each active infected individual contributes a linear piece of
/// its trajectory to a per-node cache A + B·t, so 𝔉(t,·) is exact between
/// events; piece boundaries are processed from a min-heap.
class Simulator {
 public:
  Simulator(const SimulationSetup& setup, const InitialCondition& ic, Rng rng);

  double time() const { return t_; }
  std::span<const std::int64_t> susceptible() const { return s_; }
  std::span<const std::int64_t> infected() const { return i_; }
  std::int64_t population() const { return population_; }
  std::int64_t infected_total() const { return static_cast<std::int64_t>(roster_.size()); }
  const EventCounts& counts() const { return counts_; }

  /// 𝔉(t,·) at the current time (unnormalized).
  Field force() const;
  /// Unnormalized force restricted to the initially infected cohort.
  Field initial_force() const;
  double envelope(NodeIndex x) const { return envelope_.leaf(x); }
  /// Υ(t,x) at the current state and time.
  double infection_rate(NodeIndex x) const;
  /// One acceptance draw at the frozen state; true if a proposal at x would be accepted.
  bool thinning_trial(NodeIndex x);

  /// Advances to the next event if it happens no later than `until`; otherwise
  /// moves the clock to `until` and returns none.
  EventKind step(double until);
  /// Runs to `until`, calling `observe(t)` at each output time (state is the
  /// one holding at that time).
  template <class Observer>
  void run(double until, std::span<const double> output_times, Observer&& observe);

  void check_invariants() const;

 private:
  struct Infected {
    NodeIndex node;
    std::uint32_t seg_begin;
    std::uint32_t seg_count;
    std::int32_t current;  // -1 before the first piece, seg_count once finished
    double tau;
    double end;
    bool initial;
  };

  // Binary sum tree over node weights.
  class SumTree {
   public:
    explicit SumTree(std::size_t n = 0);
    void set(std::size_t i, double w);
    double leaf(std::size_t i) const { return tree_[base_ + i]; }
    double total() const { return tree_[1]; }
    std::size_t find(double u) const;  // leaf with positive weight covering u ∈ [0, total)
   private:
    std::size_t base_ = 1;
    std::vector<double> tree_;
  };

  // Fenwick tree over integer counts.
  class CountTree {
   public:
    explicit CountTree(std::span<const std::int64_t> counts);
    void add(std::size_t i, std::int64_t delta);
    std::size_t find(std::int64_t r) const;  // node holding the r-th unit, 0-based
   private:
    std::vector<std::int64_t> tree_;
    std::size_t mask_ = 1;
  };

  double next_event_delay();
  double next_breakpoint() const;
  void add_infected(NodeIndex x, const Trajectory& traj, double tau, bool initial);
  void apply_piece(const Infected& ind, NodeIndex x, double sign);
  void set_active(NodeIndex x, bool initial, int delta);
  void refresh_envelope(NodeIndex x);
  void refresh_sources_of(NodeIndex y);
  double force_at(NodeIndex y) const;
  double inv_normalizer(NodeIndex x) const;
  void do_s_migration();
  void do_i_migration();
  void do_infection_proposal(NodeIndex x);
  void do_breakpoint();
  void log_event(const char* kind, NodeIndex node, std::optional<NodeIndex> neighbor);
  [[noreturn]] void fail(const char* what) const;

  TorusGrid grid_;
  ModelParams params_;
  InfectivityLaw law_;
  ContactKernel kernel_;
  KernelRows rows_;
  KernelRows sources_;  // transposed rows: z with β^{z,y} > 0
  double lambda_star_;
  std::int64_t n_;
  std::int64_t population_;
  bool full_check_;
  std::ostream* log_;
  Rng rng_;
  double t_ = 0.0;

  std::vector<std::int64_t> s_, i_;
  std::vector<std::int64_t> active_, active0_;
  std::vector<double> force_a_, force_b_, force0_a_, force0_b_;
  std::vector<double> contact_;  // Σ_y β^{x,y} I_active(y)
  std::int64_t s_total_ = 0;
  std::vector<Infected> roster_;
  std::vector<Segment> pieces_;
  SumTree envelope_;
  CountTree s_tree_;
  std::priority_queue<std::pair<double, std::uint32_t>, std::vector<std::pair<double, std::uint32_t>>,
                      std::greater<>>
      heap_;
  double s_rate_per_individual_;
  double i_rate_per_individual_;
  EventCounts counts_;
};

template <class Observer>
void Simulator::run(double until, std::span<const double> output_times, Observer&& observe) {
  std::size_t next_out = 0;
  while (next_out < output_times.size() && output_times[next_out] < t_) ++next_out;
  while (true) {
    const double target =
        next_out < output_times.size() ? std::min(output_times[next_out], until) : until;
    const bool is_output = next_out < output_times.size() && output_times[next_out] <= until;
    // Events strictly before the output time; state at the output time is the
    // post-event state of everything up to and including it.
    while (step(target) != EventKind::none) {
    }
    if (is_output) {
      observe(t_);
      ++next_out;
      if (t_ >= until) break;
    } else {
      break;
    }
  }
}

struct ReplicateResult {
  FieldSeries series;  // fields S, I, F, F0 normalized by N
  EventCounts counts;
};

/// Output times k·dt for k = 0..round(T/dt), the last one snapped to T.
std::vector<double> output_grid(double horizon, double dt);

/// Builds the initial placement from `seed` and simulates one replicate to the horizon.
ReplicateResult run_replicate(const SimulationSetup& setup, const FourierDensity& s0,
                              const FourierDensity& i0, std::uint64_t seed);

/// Deterministic 𝔉₀^ε(t,·) = λ̄₀(t)·Σ_y Ī^ε(0,y) q^{y,·}(0,t).
Field initial_force_limit(const SimulationSetup& setup, std::span<const double> i_bar0, double t);

}  // namespace epigrid
