#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "epigrid/io/cli.hpp"
#include "epigrid/io/field_io.hpp"
#include "json.hpp"

using namespace epigrid;
namespace fs = std::filesystem;

namespace {

std::string data(const std::string& name) { return std::string(EPIGRID_TEST_DATA) + "/" + name; }

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "epigrid");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("epigrid_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every file under a, byte-compared with its counterpart under b.
bool same_tree(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
  }
  std::size_t other_files = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) other_files += e.is_regular_file() ? 1 : 0;
  return files > 0 && files == other_files;
}

}  // namespace

TEST_CASE("validate reports bad configs with exit status 1") {
  auto r = run({"validate", "--config", data("bad_gamma.json")});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("gamma must lie in [0,1]") != std::string::npos);
  r = run({"validate", "--config", data("minimal.json")});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("config ok") != std::string::npos);
  r = run({"validate"});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("usage errors") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {}, {"bogus"}, {"simulate", "--frobnicate"}, {"solve-pde", "--backend", "rk4"}, {"validate", "--format", "xml"}}) {
    const auto r = run(args);
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("Usage:") != std::string::npos);
  }
  const auto help = run({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("simulate") != std::string::npos);
}

TEST_CASE("simulate is byte-reproducible under a fixed seed and any thread count") {
  const auto a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
  REQUIRE(run({"simulate", "--config", data("simulate.json"), "--seed", "7", "--out", a.string()}).code == 0);
  REQUIRE(run({"simulate", "--config", data("simulate.json"), "--seed", "7", "--out", b.string(), "--threads", "3"})
              .code == 0);
  CHECK(same_tree(a, b));
  ::setenv("EPIGRID_THREADS", "2", 1);
  REQUIRE(run({"simulate", "--config", data("simulate.json"), "--seed", "7", "--out", c.string()}).code == 0);
  ::unsetenv("EPIGRID_THREADS");
  CHECK(same_tree(a, c));
  CHECK(fs::exists(a / "simulate_r2.csv"));
  const auto s = read_fields((a / "simulate_r0.csv").string());
  CHECK(s.seed == 7);
  CHECK(s.layer == "stochastic");
  CHECK(s.time_count() == 11);
  const auto summary = nlohmann::json::parse(slurp(a / "simulate_summary.json"));
  CHECK(summary["replicates"].size() == 3);
  CHECK(summary["config_hash"] == s.config_hash);

  const auto d = scratch("sim_d");
  REQUIRE(run({"simulate", "--config", data("simulate.json"), "--seed", "8", "--out", d.string()}).code == 0);
  CHECK(slurp(a / "simulate_r0.csv") != slurp(d / "simulate_r0.csv"));
  ::setenv("EPIGRID_THREADS", "zero", 1);
  CHECK(run({"simulate", "--config", data("simulate.json"), "--out", d.string()}).code == kExitUsage);
  ::unsetenv("EPIGRID_THREADS");
}

TEST_CASE("event logs and NDJSON output") {
  const auto a = scratch("events");
  REQUIRE(run({"simulate", "--config", data("simulate.json"), "--out", a.string(), "--format", "ndjson",
               "--replicates", "1", "--event-log"})
              .code == 0);
  CHECK(fs::exists(a / "simulate_r0.ndjson"));
  std::ifstream log(a / "events_r0.ndjson");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    CHECK(nlohmann::json::parse(line).contains("kind"));
    ++lines;
  }
  CHECK(lines > 0);
}

TEST_CASE("deterministic solvers and tabulation") {
  const auto a = scratch("solve_a"), b = scratch("solve_b");
  for (const auto& out : {a, b}) {
    REQUIRE(run({"solve-patch", "--config", data("simulate.json"), "--out", out.string()}).code == 0);
    REQUIRE(run({"solve-pde", "--config", data("simulate.json"), "--out", out.string(), "--backend", "picard"}).code == 0);
    REQUIRE(run({"lambda-bar", "--config", data("simulate.json"), "--out", out.string(), "--dt", "0.1"}).code == 0);
  }
  CHECK(same_tree(a, b));
  const auto patch = read_fields((a / "patch.csv").string());
  CHECK(patch.layer == "patch");
  CHECK(patch.time_count() == 51);
  const auto cells = read_fields((a / "pde_cells.csv").string());
  CHECK(cells.dims == std::vector<int>{8});
  CHECK(read_fields((a / "pde.csv").string()).dims == std::vector<int>{32});
  const auto rep = nlohmann::json::parse(slurp(a / "pde_report.json"));
  CHECK(rep["backend"] == "picard");
  CHECK(rep["picard_iterations"].get<int>() >= 2);
  CHECK(nlohmann::json::parse(slurp(a / "patch_bounds.json"))["bounds"]["ok"] == true);
  std::istringstream tab(slurp(a / "lambda_bar.csv"));
  int rows = 0;
  for (std::string line; std::getline(tab, line);) rows += line[0] != '#' ? 1 : 0;
  CHECK(rows == 1 + 6);
}

TEST_CASE("numerical failures exit with status 2") {
  const auto a = scratch("numerical");
  const auto r = run({"solve-pde", "--config", data("underresolved.json"), "--out", a.string()});
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("resolution") != std::string::npos);
}

TEST_CASE("converge writes the report as JSON and tidy CSV") {
  const auto a = scratch("conv_a"), b = scratch("conv_b");
  REQUIRE(run({"converge", "--config", data("plan.json"), "--out", a.string()}).code == 0);
  REQUIRE(run({"converge", "--config", data("plan.json"), "--out", b.string(), "--threads", "4"}).code == 0);
  CHECK(same_tree(a, b));
  const auto j = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(j["report"]["kind"] == "lln_fixed_eps");
  CHECK(j["report"]["entries"].size() == 2);
  CHECK(j["seed"] == 3);
  CHECK(slurp(a / "report.csv").find("entry,N,eps,N_eps_d,field,norm,mean,stderr") != std::string::npos);
  CHECK(run({"converge", "--config", data("minimal.json"), "--out", a.string()}).code == kExitUsage);
}
