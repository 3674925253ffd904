#pragma once

#include <span>
#include <vector>

namespace epigrid {

struct MeanStderr {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

MeanStderr mean_stderr(std::span<const double> values);

struct KsResult {
  double statistic;  // sup |F_a - F_b|
  double p_value;    // asymptotic Kolmogorov distribution
};

/// Two-sample Kolmogorov–Smirnov test.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kolmogorov survival function Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}.
double kolmogorov_q(double lambda);

struct PowerLawFit {
  bool valid = false;     // false with fewer than two distinct abscissae
  double exponent = 0.0;  // slope of log y against log x
  double log_prefactor = 0.0;
  double r_squared = 0.0;
  double ci_low = 0.0;  // 95% interval for the exponent (n - 2 dof)
  double ci_high = 0.0;
  bool reliable = false;  // r_squared >= 0.9
};

/// Least-squares fit of log y = log C + exponent·log x.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

}  // namespace epigrid
