#pragma once

namespace epigrid {

struct ModelParams {
  double nu_s = 0.02;  // susceptible diffusivity
  double nu_i = 0.02;  // infected diffusivity
  double gamma = 0.0;  // mixing exponent in [0, 1]
  double horizon = 1.0;

  /// Throws ValidationError naming the violated condition.
  void validate() const;
};

}  // namespace epigrid
