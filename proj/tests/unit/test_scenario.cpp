#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "nlslab/error.hpp"
#include "nlslab/scenario.hpp"
#include "test_support.hpp"

using namespace nlslab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_scenario(is);
}

const char* kSoliton = R"(kind = multi_soliton
grid.d = 1
grid.L = 60
grid.N = 1024
p = 3
soliton.c = -1; 1
soliton.x0 = -6; 6
evolve.t1 = 0.5
evolve.dt0 = 1e-3
evolve.cadence = 50
)";

const char* kGauge = R"(kind = snls_gauge_check
grid.d = 1
grid.L = 40
grid.N = 1024
blowup.T = 1
noise.kind = constant
noise.amplitude = 0.5
noise.seed = 3
evolve.t1 = 0.5
evolve.dt0 = 1e-3
evolve.cadence = 50
)";

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("parser accepts comments, spacing and lists") {
  const ScenarioConfig c = parse(std::string("# header\n\n") + kSoliton + "  evolve.g_max = 50   # trailing\n");
  CHECK(c.kind == ScenarioKind::multi_soliton);
  CHECK(c.grid.dim == 1);
  CHECK(c.grid.points == 1024);
  CHECK(c.p == 3.0);
  REQUIRE(c.solitons.solitons.size() == 2);
  CHECK(c.solitons.solitons[1].c[0] == 1.0);
  CHECK(c.solitons.solitons[0].x0[0] == -6.0);
  CHECK(c.g_max == 50.0);
  CHECK(c.entries.at("evolve.g_max") == "50");
}

TEST_CASE("parser rejects malformed files") {
  const std::string base = kSoliton;
  CHECK_THROWS_AS(parse(base + "evolve.bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "evolve.t1 = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse("grid.d = 1\ngrid.L = 40\ngrid.N = 64\n"), ConfigError);
  CHECK_THROWS_AS(parse("kind = warp_drive\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "evolve.cadence = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "evolve.adaptive = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "noise.kind = purple\n"), ConfigError);
  std::string bad_grid = kSoliton;
  bad_grid.replace(bad_grid.find("grid.N = 1024"), 13, "grid.N = 0");
  CHECK_THROWS_AS(parse(bad_grid), ConfigError);
  std::string bad_list = kSoliton;
  bad_list.replace(bad_list.find("soliton.x0 = -6; 6"), 18, "soliton.x0 = -6; 6; 8");
  CHECK_THROWS_AS(parse(bad_list), ConfigError);
  CHECK_THROWS_AS(parse("kind = multi_bubble\ngrid.d = 1\ngrid.L = 40\ngrid.N = 64\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario_file("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("a soliton scenario passes its checks and writes its artifacts") {
  nlslab::testing::TempDir tmp("scenario");
  ScenarioConfig c = parse(kSoliton);
  c.output_dir = (tmp.path() / "run").string();
  const ScenarioResult r = run_scenario(c, true);
  CAPTURE(r.summary_json);
  CHECK(r.exit_code == 0);
  CHECK(r.failed_checks.empty());
  CHECK(r.trajectory.stop_reason == StopReason::reached_t1);

  const json s = json::parse(r.summary_json);
  for (const char* key : {"kind", "stop_reason", "steps", "final_time", "T_est", "mass_drift",
                          "banica_ok", "determinism_ok", "virial_evolution_max_residual",
                          "profile_residual_max_h1", "failed_checks", "exit_code", "config"})
    CHECK_MESSAGE(s.contains(key), key);
  CHECK(s["profile_residual_max_h1"].get<double>() < 1e-2);

  const fs::path out = tmp.path() / "run";
  for (const char* f : {"summary.json", "trajectory/trajectory.json", "trajectory/diagnostics.csv",
                        "checks/banica.csv", "checks/virial_evolution.csv"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  CHECK(nlslab::testing::read_file(out / "summary.json") == r.summary_json);

  // Re-running reproduces the artifacts byte for byte.
  const std::string first = nlslab::testing::read_file(out / "trajectory" / "diagnostics.csv");
  run_scenario(c, true);
  CHECK(nlslab::testing::read_file(out / "trajectory" / "diagnostics.csv") == first);
}

TEST_CASE("gauge check with a constant profile") {
  ScenarioConfig c = parse(kGauge);
  const ScenarioResult r = run_scenario(c, false);
  CAPTURE(r.summary_json);
  CHECK(r.exit_code == 0);
  const json s = json::parse(r.summary_json);
  REQUIRE(s.contains("gauge_max_discrepancy"));
  CHECK(s["gauge_max_discrepancy"].get<double>() < 1e-10);
  CHECK(s["gauge_same_stop"].get<bool>());
  CHECK(s["h_evo_max_residual"].is_number());
}

TEST_CASE("ensemble aggregation") {
  std::vector<EnsembleMember> m(5);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i].index = i;
    m[i].seed = 100 + i;
    m[i].T_est = 1.0 + 0.1 * static_cast<double>(i);
    m[i].stop_time = 0.9;
  }
  const EnsembleSummary s = ensemble_summary(m);
  CHECK(s.T_median == doctest::Approx(1.2));
  CHECK(s.T_q1 == doctest::Approx(1.1));
  CHECK(s.T_q3 == doctest::Approx(1.3));
  CHECK(s.stop_median == doctest::Approx(0.9));
  CHECK(json::parse(s.summary_json)["members"].size() == 5);
  CHECK_THROWS(ensemble_summary({m[0]}));
}

TEST_CASE("ensemble runs: zero noise is seed independent, seeds reproduce") {
  ScenarioConfig c = parse(kGauge);
  c.kind = ScenarioKind::critical_blowup;
  c.noise->kind = ProfileKind::schwartz;
  c.noise->amplitude = 0.0;
  c.t1 = 0.3;
  c.ensemble_size = 3;
  c.threads = 2;
  const EnsembleSummary z = run_ensemble(c, false);
  REQUIRE(z.members.size() == 3);
  for (const auto& m : z.members) {
    CHECK(m.stop_time == z.members[0].stop_time);
    CHECK(m.steps == z.members[0].steps);
    CHECK(m.mass_drift < 1e-12);
  }
  CHECK(z.members[1].seed == z.members[0].seed + 1);

  c.noise->amplitude = 0.3;
  c.threads = 1;
  const EnsembleSummary a = run_ensemble(c, false);
  c.threads = 3;
  const EnsembleSummary b = run_ensemble(c, false);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.members[i].seed == b.members[i].seed);
    CHECK(a.members[i].steps == b.members[i].steps);
    CHECK(a.members[i].mass_drift == b.members[i].mass_drift);
  }
  CHECK(a.summary_json == b.summary_json);
}

TEST_CASE("output directory resolution") {
  CHECK(resolve_output_dir("/abs/dir") == "/abs/dir");
  ::setenv("NLSLAB_OUTPUT_ROOT", "/tmp/root", 1);
  CHECK(fs::path(resolve_output_dir("rel/dir")) == fs::path("/tmp/root/rel/dir"));
  ::unsetenv("NLSLAB_OUTPUT_ROOT");
  CHECK(resolve_output_dir("rel/dir") == "rel/dir");
}

}  // TEST_SUITE
