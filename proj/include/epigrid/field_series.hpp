#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace epigrid {

/// Time-indexed fields on a rectangular point set (patch nodes or collocation
/// points), stored time-major per field.
struct FieldSeries {
  std::vector<int> dims;  // points per axis
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[f][t * point_count + p]
  std::string layer;                        // "stochastic" | "patch" | "pde"
  std::string config_hash;
  std::uint64_t seed = 0;

  FieldSeries() = default;
  FieldSeries(std::vector<int> dims_, std::vector<std::string> names_, std::string layer_);

  std::size_t point_count() const;
  std::size_t time_count() const { return times.size(); }
  std::size_t field_index(const std::string& name) const;
  std::span<const double> at(std::size_t field, std::size_t time_index) const {
    return {values[field].data() + time_index * point_count(), point_count()};
  }
  std::span<const double> at(const std::string& name, std::size_t time_index) const {
    return at(field_index(name), time_index);
  }
  /// Appends one time slice; `slices` holds one span per field, in `names` order.
  void append(double t, std::span<const std::span<const double>> slices);
};

}  // namespace epigrid
