#include "epigrid/model/infectivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epigrid/errors.hpp"

namespace epigrid {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double law_peak(const LawKind& kind) {
  return std::visit(Overloaded{[](const ExponentialDeath& k) { return k.level; },
                               [](const FixedDeath& k) { return k.level; },
                               [](const Trapezoid& k) { return k.peak; },
                               [](const CustomLaw&) { return 0.0; }},
                    kind);
}

void validate_kind(const LawKind& kind) {
  std::visit(Overloaded{
                 [](const ExponentialDeath& k) {
                   if (!(k.level >= 0.0)) throw ValidationError("infectivity level must be >= 0");
                   if (!(k.rate > 0.0)) throw ValidationError("death rate must be > 0");
                 },
                 [](const FixedDeath& k) {
                   if (!(k.level >= 0.0)) throw ValidationError("infectivity level must be >= 0");
                   if (!(k.duration > 0.0)) {
                     throw ValidationError("infectious duration must be > 0");
                   }
                 },
                 [](const Trapezoid& k) {
                   if (!(k.peak >= 0.0)) throw ValidationError("trapezoid peak must be >= 0");
                   if (!(k.ramp_up >= 0.0) || !(k.ramp_down >= 0.0)) {
                     throw ValidationError("trapezoid ramps must be >= 0");
                   }
                   if (!(k.plateau_min >= 0.0) || !(k.plateau_max >= k.plateau_min) ||
                       !std::isfinite(k.plateau_max)) {
                     throw ValidationError("trapezoid plateau needs 0 <= min <= max < inf");
                   }
                 },
                 [](const CustomLaw& k) {
                   if (!k.sampler) throw ValidationError("custom law needs a sampler");
                 }},
             kind);
}

// Antiderivative of the ramp-down profile g(u) = peak for u < 0,
// peak·(1 - u/ramp) on [0, ramp), 0 afterwards; G(0) = 0.
double ramp_antiderivative(double u, double peak, double ramp) {
  if (u < 0.0) return peak * u;
  if (ramp <= 0.0) return 0.0;
  if (u < ramp) return peak * (u - u * u / (2.0 * ramp));
  return peak * ramp / 2.0;
}

double ramp_profile(double u, double peak, double ramp) {
  if (u < 0.0) return peak;
  if (u < ramp) return peak * (1.0 - u / ramp);
  return 0.0;
}

}  // namespace

double Trajectory::operator()(double age) const {
  const std::size_t i = segment_at(age);
  if (i >= segments.size()) return 0.0;
  const Segment& s = segments[i];
  return s.value + s.slope * (age - s.start);
}

std::size_t Trajectory::segment_at(double age) const {
  if (segments.empty() || age < segments.front().start || age >= end) return segments.size();
  std::size_t i = 0;
  while (i + 1 < segments.size() && segments[i + 1].start <= age) ++i;
  return i;
}

double Trajectory::segment_end(std::size_t index) const {
  return index + 1 < segments.size() ? segments[index + 1].start : end;
}

Trajectory Trajectory::shifted(double shift) const {
  if (shift == 0.0) return *this;
  Trajectory out;
  out.end = end - shift;
  if (out.end <= 0.0) {
    out.end = 0.0;
    return out;
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const double seg_end = segment_end(i) - shift;
    if (seg_end <= 0.0) continue;
    Segment s = segments[i];
    const double new_start = s.start - shift;
    if (new_start < 0.0) {
      s.value += s.slope * (0.0 - new_start);
      s.start = 0.0;
    } else {
      s.start = new_start;
    }
    out.segments.push_back(s);
  }
  return out;
}

double Trajectory::max_value() const {
  double best = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    best = std::max(best, s.value);
    const double len = segment_end(i) - s.start;
    if (std::isfinite(len) && s.slope > 0.0) best = std::max(best, s.value + s.slope * len);
    if (!std::isfinite(len) && s.slope > 0.0) best = kInf;
  }
  return best;
}

InfectivityLaw::InfectivityLaw(LawKind kind, double lambda_star, double age_shift)
    : kind_(std::move(kind)), lambda_star_(lambda_star), age_shift_(age_shift) {
  validate_kind(kind_);
  if (!(lambda_star > 0.0) || !std::isfinite(lambda_star)) {
    throw ValidationError("lambda_star must be finite and > 0");
  }
  if (!(age_shift >= 0.0) || !std::isfinite(age_shift)) {
    throw ValidationError("age shift must be finite and >= 0");
  }
  if (law_peak(kind_) > lambda_star_) {
    throw ValidationError("infectivity bound violated: peak " + std::to_string(law_peak(kind_)) +
                          " exceeds lambda_star " + std::to_string(lambda_star_));
  }
  if (const auto* custom = std::get_if<CustomLaw>(&kind_)) {
    auto cache = std::make_shared<std::vector<Trajectory>>();
    cache->reserve(custom->mc_samples);
    Rng rng = make_rng(custom->mc_seed);
    for (std::size_t i = 0; i < custom->mc_samples; ++i) {
      Trajectory tr = custom->sampler(rng);
      if (tr.max_value() > lambda_star_ * (1.0 + 1e-12)) {
        throw ValidationError("custom infectivity sample exceeds lambda_star");
      }
      cache->push_back(std::move(tr));
    }
    mc_cache_ = std::move(cache);
  }
}

InfectivityLaw InfectivityLaw::with_default_bound(LawKind kind, double age_shift) {
  const double peak = law_peak(kind);
  return InfectivityLaw(std::move(kind), peak > 0.0 ? peak : 1.0, age_shift);
}

InfectivityLaw InfectivityLaw::with_age_shift(double shift) const {
  InfectivityLaw out = *this;
  if (!(shift >= 0.0) || !std::isfinite(shift)) {
    throw ValidationError("age shift must be finite and >= 0");
  }
  out.age_shift_ = shift;
  return out;
}

std::string InfectivityLaw::kind_name() const {
  return std::visit(Overloaded{[](const ExponentialDeath&) { return "exponential_death"; },
                               [](const FixedDeath&) { return "fixed_death"; },
                               [](const Trapezoid&) { return "trapezoid"; },
                               [](const CustomLaw&) { return "custom"; }},
                    kind_);
}

bool InfectivityLaw::monotone() const {
  return std::holds_alternative<ExponentialDeath>(kind_) ||
         std::holds_alternative<FixedDeath>(kind_);
}

Trajectory InfectivityLaw::sample_unshifted(Rng& rng) const {
  return std::visit(
      Overloaded{
          [&](const ExponentialDeath& k) {
            return Trajectory{{{0.0, k.level, 0.0}}, exponential(rng, k.rate)};
          },
          [&](const FixedDeath& k) { return Trajectory{{{0.0, k.level, 0.0}}, k.duration}; },
          [&](const Trapezoid& k) {
            const double plateau =
                k.plateau_min + (k.plateau_max - k.plateau_min) * uniform01(rng);
            Trajectory tr;
            double t = 0.0;
            if (k.ramp_up > 0.0) {
              tr.segments.push_back({0.0, 0.0, k.peak / k.ramp_up});
              t = k.ramp_up;
            }
            if (plateau > 0.0) {
              tr.segments.push_back({t, k.peak, 0.0});
              t += plateau;
            }
            if (k.ramp_down > 0.0) {
              tr.segments.push_back({t, k.peak, -k.peak / k.ramp_down});
              t += k.ramp_down;
            }
            tr.end = t;
            return tr;
          },
          [&](const CustomLaw& k) { return k.sampler(rng); }},
      kind_);
}

Trajectory InfectivityLaw::sample(Rng& rng) const {
  return sample_unshifted(rng).shifted(age_shift_);
}

double InfectivityLaw::closed_form_mean(double age) const {
  return std::visit(
      Overloaded{[&](const ExponentialDeath& k) { return k.level * std::exp(-k.rate * age); },
                 [&](const FixedDeath& k) { return age < k.duration ? k.level : 0.0; },
                 [&](const Trapezoid& k) {
                   if (age < k.ramp_up) return k.peak * age / k.ramp_up;
                   // Ramp-down starts at e = ramp_up + plateau, e uniform on [lo, hi].
                   const double lo = k.ramp_up + k.plateau_min;
                   const double hi = k.ramp_up + k.plateau_max;
                   if (hi - lo <= 0.0) return ramp_profile(age - lo, k.peak, k.ramp_down);
                   return (ramp_antiderivative(age - lo, k.peak, k.ramp_down) -
                           ramp_antiderivative(age - hi, k.peak, k.ramp_down)) /
                          (hi - lo);
                 },
                 [&](const CustomLaw&) { return 0.0; }},
      kind_);
}

MeanEstimate InfectivityLaw::mean_with_error(double t) const {
  if (t < 0.0) return {0.0, 0.0};
  if (!mc_cache_) return {closed_form_mean(t + age_shift_), 0.0};
  const auto& cache = *mc_cache_;
  if (cache.size() < kMinMonteCarloSamples) {
    throw EstimationError("mean infectivity of a custom law needs at least " +
                          std::to_string(kMinMonteCarloSamples) + " Monte Carlo samples, got " +
                          std::to_string(cache.size()));
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& tr : cache) {
    const double v = tr(t + age_shift_);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(cache.size());
  const double m = sum / n;
  const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
  return {m, std::sqrt(var / n)};
}

Trajectory sample_infectivity(const InfectivityLaw& law, Rng& rng) { return law.sample(rng); }

double mean_infectivity(const InfectivityLaw& law, double t) { return law.mean(t); }

}  // namespace epigrid
