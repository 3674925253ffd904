#pragma once

#include <iosfwd>
#include <string>

#include "epigrid/field_series.hpp"

namespace epigrid {

/// CSV: '#' metadata lines (layer, config_hash, seed, dims), then the header
/// t,i1..id,<fields> and one row per (time, point) in row-major point order.
/// NDJSON: one {"meta":...} line, then one object per (time, point).
/// Floats use the shortest decimal that round-trips.
void write_fields(const FieldSeries& series, std::ostream& out, const std::string& format);
void write_fields(const FieldSeries& series, const std::string& path, const std::string& format);

/// Reads either format (detected from the first character).
FieldSeries read_fields(std::istream& in);
FieldSeries read_fields(const std::string& path);

}  // namespace epigrid
