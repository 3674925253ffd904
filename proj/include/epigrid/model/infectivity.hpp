#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "epigrid/rng.hpp"

namespace epigrid {

/// One linear piece of an infectivity trajectory: value + slope·(age - start)
/// on [start, next start).
struct Segment {
  double start;
  double value;
  double slope;
};

/// A càdlàg infectivity function of infection age: piecewise linear on the
/// segments, zero before the first segment start and from `end` onwards.
struct Trajectory {
  std::vector<Segment> segments;
  double end = 0.0;  // η: first age after which λ stays 0; may be +inf

  double operator()(double age) const;
  /// Segment index covering `age`, or segments.size() when λ(age) is 0 past the end.
  std::size_t segment_at(double age) const;
  /// Start of the segment after `index` (or `end`).
  double segment_end(std::size_t index) const;
  /// λ(· + shift), i.e. the trajectory of someone infected `shift` ago.
  Trajectory shifted(double shift) const;
  /// sup over the stored pieces; used to check the λ* bound.
  double max_value() const;
};

struct ExponentialDeath {
  double level;  // λ on [0, η)
  double rate;   // η ~ Exp(rate)
};

struct FixedDeath {
  double level;
  double duration;  // η, may be +inf
};

/// Linear ramp up over `ramp_up`, plateau at `peak` for a Uniform[plateau_min,
/// plateau_max] duration, linear ramp down over `ramp_down`.
struct Trapezoid {
  double peak;
  double ramp_up;
  double plateau_min;
  double plateau_max;
  double ramp_down;
};

/// User-supplied sampler; its mean curve is estimated by Monte Carlo.
struct CustomLaw {
  std::function<Trajectory(Rng&)> sampler;
  std::size_t mc_samples = 20000;
  std::uint64_t mc_seed = 1;
};

using LawKind = std::variant<ExponentialDeath, FixedDeath, Trapezoid, CustomLaw>;

struct MeanEstimate {
  double mean;
  double standard_error;  // 0 for closed-form laws
};

/// Law of the random infectivity function λ(·), bounded by λ*.
///
/// `age_shift` > 0 describes individuals already infected for that long at
/// time 0 (used for the initially infected cohort): samples and means are those
/// of λ(· + age_shift).
class InfectivityLaw {
 public:
  static constexpr std::size_t kMinMonteCarloSamples = 1000;

  InfectivityLaw(LawKind kind, double lambda_star, double age_shift = 0.0);
  static InfectivityLaw with_default_bound(LawKind kind, double age_shift = 0.0);

  const LawKind& kind() const { return kind_; }
  std::string kind_name() const;
  double lambda_star() const { return lambda_star_; }
  double age_shift() const { return age_shift_; }
  InfectivityLaw with_age_shift(double shift) const;

  Trajectory sample(Rng& rng) const;
  double mean(double t) const { return mean_with_error(t).mean; }
  MeanEstimate mean_with_error(double t) const;
  /// True for the constant-until-death families, whose mean is nonincreasing.
  bool monotone() const;

 private:
  Trajectory sample_unshifted(Rng& rng) const;
  double closed_form_mean(double age) const;

  LawKind kind_;
  double lambda_star_;
  double age_shift_;
  std::shared_ptr<const std::vector<Trajectory>> mc_cache_;
};

Trajectory sample_infectivity(const InfectivityLaw& law, Rng& rng);
double mean_infectivity(const InfectivityLaw& law, double t);

}  // namespace epigrid
