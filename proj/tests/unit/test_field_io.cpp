#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "epigrid/errors.hpp"
#include "epigrid/io/field_io.hpp"
#include "epigrid/io/format.hpp"

using namespace epigrid;

namespace {

FieldSeries awkward_series(std::vector<int> dims) {
  FieldSeries s(dims, {"S", "I"}, "patch");
  s.config_hash = "0123456789abcdef";
  s.seed = 18446744073709551615ULL;
  const std::size_t p = s.point_count();
  const double tricky[] = {0.1 + 0.2, 1e-300, 5e-324, -0.0, 1.0 / 3.0, 123456789.123456789, 2.0};
  for (int n = 0; n < 3; ++n) {
    std::vector<double> a(p), b(p);
    for (std::size_t k = 0; k < p; ++k) {
      a[k] = tricky[(k + n) % 7];
      b[k] = std::sqrt(static_cast<double>(k + 1)) * (n + 0.7);
    }
    const std::span<const double> slices[] = {a, b};
    s.append(0.1 * n, slices);
  }
  return s;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::signbit(a[k]) != std::signbit(b[k]) || !(a[k] == b[k])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("shortest round-trip number formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
  CHECK(parse_double(format_double(5e-324)) == 5e-324);
  CHECK(std::isinf(parse_double("inf")));
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK_THROWS_AS(parse_double("1.5x"), ValidationError);
  CHECK_THROWS_AS(parse_double(""), ValidationError);
}

TEST_CASE("write then read reproduces every value bit for bit") {
  for (const char* format : {"csv", "ndjson"}) {
    const FieldSeries s = awkward_series({3, 2});
    std::stringstream buf;
    write_fields(s, buf, format);
    const FieldSeries r = read_fields(buf);
    CHECK(r.dims == s.dims);
    CHECK(r.names == s.names);
    CHECK(r.layer == "patch");
    CHECK(r.config_hash == s.config_hash);
    CHECK(r.seed == s.seed);
    CHECK(bit_equal(r.times, s.times));
    for (std::size_t f = 0; f < s.values.size(); ++f) CHECK(bit_equal(r.values[f], s.values[f]));
  }
}

TEST_CASE("empty series gives a header-only CSV") {
  const FieldSeries s({4}, {"S", "I", "F"}, "pde");
  std::stringstream buf;
  write_fields(s, buf, "csv");
  std::string line, last;
  int data_lines = 0;
  while (std::getline(buf, line)) {
    if (line[0] == '#') continue;
    last = line;
    ++data_lines;
  }
  CHECK(data_lines == 1);
  CHECK(last == "t,i1,S,I,F");
  std::stringstream again;
  write_fields(s, again, "csv");
  const FieldSeries r = read_fields(again);
  CHECK(r.time_count() == 0);
  CHECK(r.names == s.names);
}

TEST_CASE("two-dimensional series list both indices in row-major order") {
  const FieldSeries s = awkward_series({2, 3});
  std::stringstream buf;
  write_fields(s, buf, "csv");
  std::string line;
  while (std::getline(buf, line) && line[0] == '#') {
  }
  CHECK(line == "t,i1,i2,S,I");
  std::vector<std::string> prefixes;
  for (int k = 0; k < 6 && std::getline(buf, line); ++k) prefixes.push_back(line.substr(0, 5));
  CHECK(prefixes == std::vector<std::string>{"0,0,0", "0,0,1", "0,0,2", "0,1,0", "0,1,1", "0,1,2"});

  std::stringstream nd;
  write_fields(s, nd, "ndjson");
  std::getline(nd, line);
  CHECK(line.find("\"meta\"") != std::string::npos);
  std::getline(nd, line);
  std::getline(nd, line);
  CHECK(line.find("\"index\":[0,1]") != std::string::npos);
}

TEST_CASE("malformed field files and IO failures") {
  std::stringstream bad("# layer=x\nt,S\n0,1\n");
  CHECK_THROWS_AS(read_fields(bad), ValidationError);
  std::stringstream ragged("# dims=2\nt,i1,S\n0,0,1\n");
  CHECK_THROWS_AS(read_fields(ragged), ValidationError);
  std::stringstream order("# dims=2\nt,i1,S\n0,1,1\n0,0,1\n");
  CHECK_THROWS_AS(read_fields(order), ValidationError);
  std::stringstream junk("hello");
  CHECK_THROWS_AS(read_fields(junk), ValidationError);
  const FieldSeries s = awkward_series({2});
  CHECK_THROWS_WITH_AS(write_fields(s, "/nonexistent-dir/x.csv", "csv"), doctest::Contains("/nonexistent-dir/x.csv"),
                       IoError);
  CHECK_THROWS_AS(read_fields(std::string("/nonexistent-dir/x.csv")), IoError);
  std::stringstream sink;
  CHECK_THROWS_AS(write_fields(s, sink, "xml"), ValidationError);
}
