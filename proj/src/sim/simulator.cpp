#include "epigrid/sim/simulator.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "epigrid/errors.hpp"
#include "epigrid/grid/laplacian.hpp"

namespace epigrid {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

PressureField infection_pressure(std::span<const std::int64_t> s, std::span<const std::int64_t> i,
                                 std::span<const double> force, const KernelRows& rows,
                                 double gamma, std::int64_t n_per_patch) {
  const std::size_t m = s.size();
  if (i.size() != m || force.size() != m || rows.size != m) {
    throw DimensionError("infection_pressure: field sizes differ");
  }
  PressureField out{Field(m, 0.0), Field(m, 0.0)};
  const double n = static_cast<double>(n_per_patch);
  for (NodeIndex x = 0; x < m; ++x) {
    const auto b = static_cast<double>(s[x] + i[x]);
    if (b == 0.0) continue;
    double sum = 0.0;
    auto cols = rows.row_cols(x);
    auto vals = rows.row_vals(x);
    for (std::size_t k = 0; k < cols.size(); ++k) sum += vals[k] * force[cols[k]];
    out.gamma_bar[x] = sum / (std::pow(n, 1.0 - gamma) * std::pow(b, gamma));
    out.upsilon[x] = static_cast<double>(s[x]) * out.gamma_bar[x];
  }
  return out;
}

// ---- trees ----

Simulator::SumTree::SumTree(std::size_t n) {
  while (base_ < n) base_ <<= 1;
  tree_.assign(2 * base_, 0.0);
}

void Simulator::SumTree::set(std::size_t i, double w) {
  std::size_t k = base_ + i;
  tree_[k] = w;
  for (k >>= 1; k >= 1; k >>= 1) tree_[k] = tree_[2 * k] + tree_[2 * k + 1];
}

std::size_t Simulator::SumTree::find(double u) const {
  std::size_t k = 1;
  while (k < base_) {
    const double left = tree_[2 * k];
    if (tree_[2 * k + 1] <= 0.0 || (u < left && left > 0.0)) {
      k = 2 * k;
    } else {
      u -= left;
      k = 2 * k + 1;
    }
  }
  return k - base_;
}

Simulator::CountTree::CountTree(std::span<const std::int64_t> counts)
    : tree_(counts.size() + 1, 0) {
  for (std::size_t i = 0; i < counts.size(); ++i) add(i, counts[i]);
  mask_ = std::bit_floor(std::max<std::size_t>(counts.size(), 1));
}

void Simulator::CountTree::add(std::size_t i, std::int64_t delta) {
  for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
}

std::size_t Simulator::CountTree::find(std::int64_t r) const {
  std::size_t pos = 0;
  for (std::size_t step = mask_; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next < tree_.size() && tree_[next] <= r) {
      pos = next;
      r -= tree_[next];
    }
  }
  return pos;
}

// ---- simulator ----

Simulator::Simulator(const SimulationSetup& setup, const InitialCondition& ic, Rng rng)
    : grid_(setup.grid),
      params_(setup.params),
      law_(setup.law),
      kernel_(setup.kernel),
      rows_(setup.kernel.discretize_base(setup.grid)),
      sources_(rows_.transposed()),
      lambda_star_(std::max(setup.law.lambda_star(), setup.initial_law.lambda_star())),
      n_(setup.n_per_patch),
      population_(ic.population()),
      full_check_(setup.full_invariant_check),
      log_(setup.event_log),
      rng_(std::move(rng)),
      s_(ic.s_counts),
      i_(grid_.node_count(), 0),
      active_(grid_.node_count(), 0),
      active0_(grid_.node_count(), 0),
      force_a_(grid_.node_count(), 0.0),
      force_b_(grid_.node_count(), 0.0),
      force0_a_(grid_.node_count(), 0.0),
      force0_b_(grid_.node_count(), 0.0),
      contact_(grid_.node_count(), 0.0),
      envelope_(grid_.node_count()),
      s_tree_(ic.s_counts) {
  params_.validate();
  if (!(ic.grid == grid_)) throw DimensionError("initial condition grid differs from setup grid");
  if (ic.n_per_patch != n_) throw DomainError("initial condition built for a different N");
  for (auto c : s_) s_total_ += c;
  // A walk on a single-node torus never leaves its node.
  const double neighbors = grid_.inv_mesh() > 1 ? 2.0 * grid_.dim() : 0.0;
  const double inv_eps2 = static_cast<double>(grid_.inv_mesh()) * grid_.inv_mesh();
  s_rate_per_individual_ = neighbors * params_.nu_s * inv_eps2;
  i_rate_per_individual_ = neighbors * params_.nu_i * inv_eps2;

  for (NodeIndex x = 0; x < grid_.node_count(); ++x) {
    for (std::int64_t k = 0; k < ic.i_counts[x]; ++k) {
      add_infected(x, setup.initial_law.sample(rng_), 0.0, true);
    }
  }
  for (NodeIndex x = 0; x < grid_.node_count(); ++x) refresh_envelope(x);
  if (full_check_) check_invariants();
}

double Simulator::inv_normalizer(NodeIndex x) const {
  const auto b = static_cast<double>(s_[x] + i_[x]);
  const double g = params_.gamma;
  return 1.0 / (std::pow(static_cast<double>(n_), 1.0 - g) * std::pow(b, g));
}

double Simulator::force_at(NodeIndex y) const {
  if (active_[y] == 0) return 0.0;
  const double v = force_a_[y] + force_b_[y] * t_;
  return std::clamp(v, 0.0, lambda_star_ * static_cast<double>(active_[y]));
}

Field Simulator::force() const {
  Field f(grid_.node_count());
  for (NodeIndex y = 0; y < f.size(); ++y) f[y] = force_at(y);
  return f;
}

Field Simulator::initial_force() const {
  Field f(grid_.node_count(), 0.0);
  for (NodeIndex y = 0; y < f.size(); ++y) {
    if (active0_[y] == 0) continue;
    f[y] = std::clamp(force0_a_[y] + force0_b_[y] * t_, 0.0,
                      lambda_star_ * static_cast<double>(active0_[y]));
  }
  return f;
}

double Simulator::infection_rate(NodeIndex x) const {
  if (s_[x] == 0) return 0.0;
  double sum = 0.0;
  auto cols = rows_.row_cols(x);
  auto vals = rows_.row_vals(x);
  for (std::size_t k = 0; k < cols.size(); ++k) sum += vals[k] * force_at(cols[k]);
  return static_cast<double>(s_[x]) * kernel_.modulation()(t_) * sum * inv_normalizer(x);
}

void Simulator::refresh_envelope(NodeIndex x) {
  double e = 0.0;
  if (s_[x] > 0 && contact_[x] > 0.0) {
    e = static_cast<double>(s_[x]) * lambda_star_ * contact_[x] * inv_normalizer(x);
  }
  envelope_.set(x, e);
}

void Simulator::refresh_sources_of(NodeIndex y) {
  for (NodeIndex z : sources_.row_cols(y)) refresh_envelope(z);
}

void Simulator::set_active(NodeIndex x, bool initial, int delta) {
  active_[x] += delta;
  if (initial) active0_[x] += delta;
  if (active_[x] < 0 || active0_[x] < 0) fail("negative active count");
  if (active_[x] == 0) force_a_[x] = force_b_[x] = 0.0;
  if (active0_[x] == 0) force0_a_[x] = force0_b_[x] = 0.0;
  auto cols = sources_.row_cols(x);
  auto vals = sources_.row_vals(x);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const NodeIndex z = cols[k];
    double c = 0.0;
    auto zc = rows_.row_cols(z);
    auto zv = rows_.row_vals(z);
    for (std::size_t j = 0; j < zc.size(); ++j) c += zv[j] * static_cast<double>(active_[zc[j]]);
    contact_[z] = c;
    (void)vals;
    refresh_envelope(z);
  }
}

void Simulator::apply_piece(const Infected& ind, NodeIndex x, double sign) {
  if (ind.current < 0 || ind.current >= static_cast<std::int32_t>(ind.seg_count)) return;
  const Segment& p = pieces_[ind.seg_begin + ind.current];
  const double a = sign * (p.value - p.slope * (ind.tau + p.start));
  const double b = sign * p.slope;
  force_a_[x] += a;
  force_b_[x] += b;
  if (ind.initial) {
    force0_a_[x] += a;
    force0_b_[x] += b;
  }
}

void Simulator::add_infected(NodeIndex x, const Trajectory& traj, double tau, bool initial) {
  if (traj.max_value() > lambda_star_ * (1.0 + 1e-12)) fail("sampled infectivity exceeds lambda_star");
  Infected ind{x,
               static_cast<std::uint32_t>(pieces_.size()),
               static_cast<std::uint32_t>(traj.segments.size()),
               -1,
               tau,
               traj.end,
               initial};
  pieces_.insert(pieces_.end(), traj.segments.begin(), traj.segments.end());
  ++i_[x];
  const auto idx = static_cast<std::uint32_t>(roster_.size());
  const bool live = ind.seg_count > 0 && traj.end > 0.0;
  if (live) {
    const std::size_t seg = traj.segment_at(0.0);
    if (seg < traj.segments.size()) {
      ind.current = static_cast<std::int32_t>(seg);
      apply_piece(ind, x, 1.0);
      const double next = tau + std::min(traj.segment_end(seg), traj.end);
      if (std::isfinite(next)) heap_.emplace(next, idx);
    } else if (traj.segments.front().start > 0.0) {
      heap_.emplace(tau + traj.segments.front().start, idx);
    } else {
      ind.current = static_cast<std::int32_t>(ind.seg_count);
    }
  } else {
    ind.current = static_cast<std::int32_t>(ind.seg_count);
  }
  roster_.push_back(ind);
  if (ind.current < static_cast<std::int32_t>(ind.seg_count)) set_active(x, initial, +1);
}

double Simulator::next_breakpoint() const {
  return heap_.empty() ? std::numeric_limits<double>::infinity() : heap_.top().first;
}

EventKind Simulator::step(double until) {
  const double s_rate = s_rate_per_individual_ * static_cast<double>(s_total_);
  const double i_rate = i_rate_per_individual_ * static_cast<double>(roster_.size());
  const double env = envelope_.total();
  const double total = s_rate + i_rate + env;
  const double t_prop = total > 0.0 ? t_ + exponential(rng_, total)
                                    : std::numeric_limits<double>::infinity();
  const double t_bp = next_breakpoint();
  if (std::min(t_prop, t_bp) > until) {
    t_ = std::max(t_, until);
    return EventKind::none;
  }
  if (t_bp <= t_prop) {
    t_ = t_bp;
    do_breakpoint();
    ++counts_.breakpoints;
    return EventKind::breakpoint;
  }
  t_ = t_prop;
  const double u = uniform01(rng_) * total;
  EventKind kind;
  if (u < s_rate) {
    do_s_migration();
    kind = EventKind::s_migration;
  } else if (u < s_rate + i_rate) {
    do_i_migration();
    kind = EventKind::i_migration;
  } else {
    const NodeIndex x = static_cast<NodeIndex>(envelope_.find(uniform01(rng_) * env));
    const auto before = counts_.infections;
    do_infection_proposal(x);
    kind = counts_.infections > before ? EventKind::infection : EventKind::rejection;
  }
  if (full_check_) check_invariants();
  return kind;
}

void Simulator::do_s_migration() {
  const NodeIndex x =
      static_cast<NodeIndex>(s_tree_.find(static_cast<std::int64_t>(
          uniform_index(rng_, static_cast<std::uint64_t>(s_total_)))));
  auto nb = grid_.neighbors(x);
  const NodeIndex y = nb[uniform_index(rng_, nb.size())];
  if (s_[x] <= 0) fail("susceptible migration from an empty node");
  --s_[x];
  ++s_[y];
  s_tree_.add(x, -1);
  s_tree_.add(y, +1);
  refresh_envelope(x);
  refresh_envelope(y);
  ++counts_.s_migrations;
  log_event("migrate_s", x, y);
}

void Simulator::do_i_migration() {
  const auto j = static_cast<std::uint32_t>(uniform_index(rng_, roster_.size()));
  Infected& ind = roster_[j];
  const NodeIndex x = ind.node;
  auto nb = grid_.neighbors(x);
  const NodeIndex y = nb[uniform_index(rng_, nb.size())];
  if (i_[x] <= 0) fail("infected migration from an empty node");
  --i_[x];
  ++i_[y];
  ind.node = y;
  const bool active = ind.current < static_cast<std::int32_t>(ind.seg_count);
  if (active && x != y) {
    apply_piece(ind, x, -1.0);
    apply_piece(ind, y, +1.0);
    set_active(x, ind.initial, -1);
    set_active(y, ind.initial, +1);
  }
  refresh_envelope(x);
  refresh_envelope(y);
  ++counts_.i_migrations;
  log_event("migrate_i", x, y);
}

void Simulator::do_infection_proposal(NodeIndex x) {
  const double e = envelope_.leaf(x);
  const double rate = infection_rate(x);
  if (rate > e * (1.0 + 1e-9) + 1e-300) fail("thinning envelope below the infection rate");
  if (uniform01(rng_) * e >= rate) {
    ++counts_.rejections;
    log_event("rejection", x, std::nullopt);
    return;
  }
  if (s_[x] <= 0) fail("infection at a node without susceptibles");
  --s_[x];
  --s_total_;
  s_tree_.add(x, -1);
  add_infected(x, law_.sample(rng_), t_, false);
  refresh_envelope(x);
  ++counts_.infections;
  log_event("infection", x, std::nullopt);
}

void Simulator::do_breakpoint() {
  const auto j = heap_.top().second;
  heap_.pop();
  Infected& ind = roster_[j];
  const NodeIndex x = ind.node;
  apply_piece(ind, x, -1.0);
  ++ind.current;
  const bool done = ind.current >= static_cast<std::int32_t>(ind.seg_count) ||
                    pieces_[ind.seg_begin + ind.current].start >= ind.end;
  if (done) {
    ind.current = static_cast<std::int32_t>(ind.seg_count);
    set_active(x, ind.initial, -1);
    return;
  }
  apply_piece(ind, x, +1.0);
  const std::size_t next_piece = static_cast<std::size_t>(ind.current) + 1;
  const double next_start = next_piece < ind.seg_count
                                ? std::min(pieces_[ind.seg_begin + next_piece].start, ind.end)
                                : ind.end;
  if (std::isfinite(next_start)) heap_.emplace(ind.tau + next_start, j);
}

bool Simulator::thinning_trial(NodeIndex x) {
  const double e = envelope_.leaf(x);
  if (e <= 0.0) return false;
  return uniform01(rng_) * e < infection_rate(x);
}

void Simulator::check_invariants() const {
  ++const_cast<EventCounts&>(counts_).invariant_checks;
  std::int64_t total = 0;
  std::int64_t infected = 0;
  for (NodeIndex x = 0; x < grid_.node_count(); ++x) {
    if (s_[x] < 0 || i_[x] < 0) fail("negative compartment count");
    total += s_[x] + i_[x];
    infected += i_[x];
    const double f = force_a_[x] + force_b_[x] * t_;
    if (f > lambda_star_ * static_cast<double>(active_[x]) * (1.0 + 1e-9) + 1e-9) {
      fail("force of infection exceeds lambda_star times the infected count");
    }
  }
  if (total != population_) fail("total population changed");
  if (infected != static_cast<std::int64_t>(roster_.size())) fail("infected roster out of sync");
}

void Simulator::log_event(const char* kind, NodeIndex node, std::optional<NodeIndex> neighbor) {
  if (log_ == nullptr) return;
  *log_ << "{\"t\":" << format_double(t_) << ",\"kind\":\"" << kind << "\",\"node\":" << node
        << ",\"neighbor\":" << (neighbor ? std::to_string(*neighbor) : std::string("null"))
        << "}\n";
}

void Simulator::fail(const char* what) const {
  throw InvariantViolation(std::string(what) + " at t=" + format_double(t_));
}

// ---- replicate driver ----

std::vector<double> output_grid(double horizon, double dt) {
  if (!(dt > 0.0)) throw ValidationError("output step must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * dt;
  t.back() = horizon;
  return t;
}

ReplicateResult run_replicate(const SimulationSetup& setup, const FourierDensity& s0,
                              const FourierDensity& i0, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const InitialCondition ic = build_initial_condition(s0, i0, setup.grid, setup.n_per_patch, rng);
  Simulator sim(setup, ic, std::move(rng));
  ReplicateResult out{FieldSeries(setup.grid.dims(), {"S", "I", "F", "F0"}, "stochastic"), {}};
  out.series.seed = seed;
  const double inv_n = 1.0 / static_cast<double>(setup.n_per_patch);
  const auto times = output_grid(setup.params.horizon, setup.output_dt);
  const std::size_t m = setup.grid.node_count();
  Field s(m), i(m);
  sim.run(setup.params.horizon, times, [&](double t) {
    Field f = sim.force();
    Field f0 = sim.initial_force();
    for (std::size_t x = 0; x < m; ++x) {
      s[x] = static_cast<double>(sim.susceptible()[x]) * inv_n;
      i[x] = static_cast<double>(sim.infected()[x]) * inv_n;
      f[x] *= inv_n;
      f0[x] *= inv_n;
    }
    const std::span<const double> slices[] = {s, i, f, f0};
    out.series.append(t, slices);
  });
  out.counts = sim.counts();
  return out;
}

Field initial_force_limit(const SimulationSetup& setup, std::span<const double> i_bar0, double t) {
  const LaplacianOperator op(setup.grid, setup.params.nu_i);
  const TransitionKernel q(op, t);
  // Σ_y Ī(0,y) q^{y,x}: the walk kernel is symmetric, so this is q applied to Ī(0).
  Field f = q.apply(i_bar0);
  const double mean = setup.initial_law.mean(t);
  for (double& v : f) v *= mean;
  return f;
}

}  // namespace epigrid
