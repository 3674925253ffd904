#include "epigrid/model/params.hpp"

#include <cmath>
#include <string>

#include "epigrid/errors.hpp"
#include "epigrid/io/format.hpp"

namespace epigrid {

void ModelParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ValidationError("mixing exponent gamma must lie in [0,1], got " + format_double(gamma));
  }
  if (!(nu_s >= 0.0) || !std::isfinite(nu_s)) {
    throw ValidationError("susceptible diffusivity nu_s must be finite and >= 0");
  }
  if (!(nu_i >= 0.0) || !std::isfinite(nu_i)) {
    throw ValidationError("infected diffusivity nu_i must be finite and >= 0");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("horizon must be finite and > 0");
  }
}

}  // namespace epigrid
