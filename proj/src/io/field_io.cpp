#include "epigrid/io/field_io.hpp"

#include <fstream>
#include <sstream>

#include "epigrid/errors.hpp"
#include "epigrid/io/format.hpp"
#include "json.hpp"

namespace epigrid {
namespace {

using nlohmann::json;

// Row-major multi-index of flat point p (first axis slowest).
std::vector<int> unflatten(std::size_t p, const std::vector<int>& dims) {
  std::vector<int> idx(dims.size());
  for (std::size_t a = dims.size(); a-- > 0;) {
    idx[a] = static_cast<int>(p % dims[a]);
    p /= dims[a];
  }
  return idx;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string dims_text(const std::vector<int>& dims) {
  std::string s;
  for (int n : dims) s += (s.empty() ? "" : "x") + std::to_string(n);
  return s;
}

double json_double(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

void write_csv(const FieldSeries& s, std::ostream& out) {
  out << "# layer=" << s.layer << "\n# config_hash=" << s.config_hash << "\n# seed=" << s.seed
      << "\n# dims=" << dims_text(s.dims) << "\nt";
  for (std::size_t a = 0; a < s.dims.size(); ++a) out << ",i" << a + 1;
  for (const auto& n : s.names) out << ',' << n;
  out << '\n';
  const std::size_t pc = s.point_count();
  for (std::size_t n = 0; n < s.time_count(); ++n) {
    const std::string t = format_double(s.times[n]);
    for (std::size_t p = 0; p < pc; ++p) {
      out << t;
      for (int i : unflatten(p, s.dims)) out << ',' << i;
      for (std::size_t f = 0; f < s.names.size(); ++f) out << ',' << format_double(s.values[f][n * pc + p]);
      out << '\n';
    }
  }
}

void write_ndjson(const FieldSeries& s, std::ostream& out) {
  json meta{{"layer", s.layer}, {"config_hash", s.config_hash}, {"seed", s.seed}, {"dims", s.dims},
            {"fields", s.names}};
  out << json{{"meta", meta}}.dump() << '\n';
  const std::size_t pc = s.point_count();
  for (std::size_t n = 0; n < s.time_count(); ++n) {
    for (std::size_t p = 0; p < pc; ++p) {
      nlohmann::ordered_json rec;
      rec["t"] = s.times[n];
      rec["index"] = unflatten(p, s.dims);
      for (std::size_t f = 0; f < s.names.size(); ++f) rec[s.names[f]] = s.values[f][n * pc + p];
      out << rec.dump() << '\n';
    }
  }
}

FieldSeries read_csv(std::istream& in) {
  FieldSeries s;
  std::string line;
  bool have_dims = false;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(2, eq - 2), value = line.substr(eq + 1);
    if (key == "layer") s.layer = value;
    if (key == "config_hash") s.config_hash = value;
    if (key == "seed") s.seed = std::stoull(value);
    if (key == "dims") {
      for (const auto& d : split(value, 'x')) s.dims.push_back(std::stoi(d));
      have_dims = true;
    }
  }
  if (!have_dims) throw ValidationError("CSV field file lacks a '# dims=' line");
  const auto header = split(line, ',');
  const std::size_t d = s.dims.size();
  if (header.size() < 1 + d || header[0] != "t") throw ValidationError("malformed CSV header '" + line + "'");
  s.names.assign(header.begin() + 1 + static_cast<std::ptrdiff_t>(d), header.end());
  s.values.assign(s.names.size(), {});
  const std::size_t pc = s.point_count();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw ValidationError("CSV row " + std::to_string(row) + " has the wrong width");
    const double t = parse_double(cells[0]);
    const std::size_t p = row % pc;
    if (p == 0) s.times.push_back(t);
    const auto idx = unflatten(p, s.dims);
    for (std::size_t a = 0; a < d; ++a) {
      if (std::stoi(cells[1 + a]) != idx[a]) throw ValidationError("CSV rows are not in row-major point order");
    }
    for (std::size_t f = 0; f < s.names.size(); ++f) s.values[f].push_back(parse_double(cells[1 + d + f]));
    ++row;
  }
  if (row % pc != 0) throw ValidationError("CSV series is not rectangular");
  return s;
}

FieldSeries read_ndjson(std::istream& in) {
  std::string line;
  std::getline(in, line);
  const json meta = json::parse(line).at("meta");
  FieldSeries s(meta.at("dims").get<std::vector<int>>(), meta.at("fields").get<std::vector<std::string>>(),
                meta.at("layer").get<std::string>());
  s.config_hash = meta.at("config_hash").get<std::string>();
  s.seed = meta.at("seed").get<std::uint64_t>();
  const std::size_t pc = s.point_count();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    const std::size_t p = row % pc;
    if (p == 0) s.times.push_back(json_double(rec.at("t")));
    if (rec.at("index").get<std::vector<int>>() != unflatten(p, s.dims)) {
      throw ValidationError("NDJSON records are not in row-major point order");
    }
    for (std::size_t f = 0; f < s.names.size(); ++f) s.values[f].push_back(json_double(rec.at(s.names[f])));
    ++row;
  }
  if (row % pc != 0) throw ValidationError("NDJSON series is not rectangular");
  return s;
}

}  // namespace

void write_fields(const FieldSeries& series, std::ostream& out, const std::string& format) {
  if (format == "csv") {
    write_csv(series, out);
  } else if (format == "ndjson") {
    write_ndjson(series, out);
  } else {
    throw ValidationError("unknown output format '" + format + "' (expected csv or ndjson)");
  }
}

void write_fields(const FieldSeries& series, const std::string& path, const std::string& format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_fields(series, out, format);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

FieldSeries read_fields(std::istream& in) {
  const int c = in.peek();
  if (c == '{') return read_ndjson(in);
  if (c == '#' || c == 't') return read_csv(in);
  throw ValidationError("unrecognized field file format");
}

FieldSeries read_fields(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return read_fields(in);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace epigrid
