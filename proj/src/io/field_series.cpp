#include "epigrid/field_series.hpp"

#include "epigrid/errors.hpp"

namespace epigrid {

FieldSeries::FieldSeries(std::vector<int> dims_, std::vector<std::string> names_,
                         std::string layer_)
    : dims(std::move(dims_)), names(std::move(names_)), values(names.size()),
      layer(std::move(layer_)) {}

std::size_t FieldSeries::point_count() const {
  std::size_t p = 1;
  for (int n : dims) p *= static_cast<std::size_t>(n);
  return p;
}

std::size_t FieldSeries::field_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw DomainError("field series has no field named '" + name + "'");
}

void FieldSeries::append(double t, std::span<const std::span<const double>> slices) {
  if (slices.size() != names.size()) throw DimensionError("append needs one slice per field");
  const std::size_t p = point_count();
  for (std::size_t f = 0; f < slices.size(); ++f) {
    if (slices[f].size() != p) throw DimensionError("field slice has the wrong point count");
    values[f].insert(values[f].end(), slices[f].begin(), slices[f].end());
  }
  times.push_back(t);
}

}  // namespace epigrid
