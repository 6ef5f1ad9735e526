// Drives the shared library through its C surface and the CLI binary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "advnet/advnet.h"

namespace fs = std::filesystem;

namespace {

constexpr const char* kScenario = R"({
  "mode": "stability", "rounds": 200, "seed": 3,
  "topology": {"kind": "line", "servers": 3},
  "adversary": {"phase_min": 20, "phase_max": 60, "flows": [[0, 2], [2, 0]],
                "flow_rates": [0.15, 0.15], "min_slack": 0.3},
  "sweep_seeds": [1, 2, 3]
})";

fs::path scratch(const char* name) { return fs::temp_directory_path() / name; }

int run_cli(const std::string& args) {
  const char* cli = std::getenv("ADVNET_CLI");
  REQUIRE(cli != nullptr);
  const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string scenario_dir() {
  const char* d = std::getenv("ADVNET_SCENARIOS");
  REQUIRE(d != nullptr);
  return d;
}

}  // namespace

TEST_CASE("version") { CHECK(std::string(advnet_version()) == "0.1.0"); }

TEST_CASE("run through the C API") {
  advnet_scenario* s = nullptr;
  REQUIRE(advnet_scenario_from_string(kScenario, &s) == ADVNET_OK);
  advnet_run_summary a{}, b{};
  CHECK(advnet_run(s, nullptr, nullptr, &a) == ADVNET_OK);
  CHECK(advnet_run(s, nullptr, nullptr, &b) == ADVNET_OK);
  CHECK(a.rounds == 200);
  CHECK(a.invariant_violations == 0);
  CHECK(a.avg_queue == b.avg_queue);
  CHECK(std::string(a.trace_hash).size() == 40);
  CHECK(advnet_scenario_set_seed(s, 4) == ADVNET_OK);
  CHECK(advnet_run(s, nullptr, nullptr, &b) == ADVNET_OK);
  CHECK(std::string(a.trace_hash) != std::string(b.trace_hash));
  advnet_scenario_free(s);
}

TEST_CASE("trace save, load and verify") {
  advnet_scenario* s = nullptr;
  REQUIRE(advnet_scenario_from_string(kScenario, &s) == ADVNET_OK);
  advnet_trace* t = nullptr;
  REQUIRE(advnet_trace_generate(s, &t) == ADVNET_OK);
  const fs::path path = scratch("advnet_capi_trace.jsonl");
  REQUIRE(advnet_trace_save(t, path.c_str()) == ADVNET_OK);
  advnet_trace* back = nullptr;
  REQUIRE(advnet_trace_load(path.c_str(), &back) == ADVNET_OK);
  char h1[41], h2[41];
  CHECK(advnet_trace_hash(t, h1) == ADVNET_OK);
  CHECK(advnet_trace_hash(back, h2) == ADVNET_OK);
  CHECK(std::string(h1) == std::string(h2));
  advnet_trace_verdict v{};
  CHECK(advnet_trace_verify(back, &v) == ADVNET_OK);
  CHECK(v.accepted == 1);
  CHECK(v.slack >= 0.3);
  CHECK(v.invariant_problems == 0);
  advnet_run_summary r{};
  CHECK(advnet_run(s, back, nullptr, &r) == ADVNET_OK);
  CHECK(std::string(r.trace_hash) == std::string(h1));
  advnet_trace_free(t);
  advnet_trace_free(back);
  advnet_scenario_free(s);
  fs::remove(path);
}

TEST_CASE("error codes") {
  advnet_scenario* s = nullptr;
  CHECK(advnet_scenario_from_string("{", &s) == ADVNET_PARSE);
  CHECK(std::string(advnet_last_error()).size() > 0);
  CHECK(advnet_scenario_from_string(R"({"scheduler": {"speed": 1}})", &s) == ADVNET_PARSE);
  CHECK(std::string(advnet_last_error()).find("scheduler.speed") != std::string::npos);
  CHECK(advnet_scenario_load("/nonexistent/x.json", &s) == ADVNET_IO);
  CHECK(advnet_scenario_load(nullptr, &s) == ADVNET_INVALID_ARGUMENT);
  advnet_trace* t = nullptr;
  CHECK(advnet_trace_load("/nonexistent/x.jsonl", &t) == ADVNET_IO);
  REQUIRE(advnet_scenario_from_string(kScenario, &s) == ADVNET_OK);
  CHECK(advnet_scenario_override(s, "adversary.flow_rates=[0.9,0.9]") == ADVNET_OK);
  advnet_run_summary r{};
  CHECK(advnet_run(s, nullptr, nullptr, &r) == ADVNET_CONSTRUCTION);
  CHECK(advnet_run(s, nullptr, "/proc/advnet/forbidden", &r) != ADVNET_OK);
  advnet_scenario_free(s);
}

TEST_CASE("sweep and warnings") {
  advnet_scenario* s = nullptr;
  REQUIRE(advnet_scenario_from_string(kScenario, &s) == ADVNET_OK);
  const char* values[] = {"nso", "oracle_backpressure"};
  advnet_sweep_result res{};
  const fs::path dir = scratch("advnet_capi_sweep");
  CHECK(advnet_sweep(s, "scheduler", values, 2, dir.c_str(), &res) == ADVNET_OK);
  CHECK(res.runs == 6);
  CHECK(res.runs_with_violations == 0);
  CHECK(fs::exists(dir / "sweep.csv"));
  fs::remove_all(dir);
  CHECK(advnet_sweep(s, "colour", values, 2, nullptr, &res) == ADVNET_PARSE);
  advnet_scenario_free(s);

  std::vector<std::string> messages;
  advnet_set_message_handler(
      [](const char* m, void* user) { static_cast<std::vector<std::string>*>(user)->emplace_back(m); },
      &messages);
  advnet_scenario* u = nullptr;
  REQUIRE(advnet_scenario_load((scenario_dir() + "/utility_line.json").c_str(), &u) == ADVNET_OK);
  REQUIRE(advnet_scenario_override(u, "rounds=400") == ADVNET_OK);
  REQUIRE(advnet_scenario_override(u, "scheduler.tradeoff=400") == ADVNET_OK);
  advnet_run_summary r{};
  CHECK(advnet_run(u, nullptr, nullptr, &r) == ADVNET_OK);
  CHECK(r.warnings == 1);
  CHECK(messages.size() == 1);
  advnet_set_message_handler(nullptr, nullptr);
  advnet_scenario_free(u);
}

TEST_CASE("command line") {
  const std::string scen = scenario_dir() + "/stability_line.json";
  const fs::path out = scratch("advnet_cli_out");
  const fs::path trace = scratch("advnet_cli_trace.jsonl");
  CHECK(run_cli("run --scenario " + scen + " --override rounds=500 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "rounds.csv"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(run_cli("gen-trace --scenario " + scen + " --override rounds=500 --out " + trace.string()) == 0);
  CHECK(run_cli("verify-trace --trace " + trace.string()) == 0);
  CHECK(run_cli("run --scenario " + scen + " --override rounds=500 --trace " + trace.string()) == 0);
  CHECK(run_cli("sweep --scenario " + scen + " --override rounds=300 --axis seed --values 1,2 --out " +
                out.string()) == 0);
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(run_cli("run --scenario /nonexistent.json") == 2);
  CHECK(run_cli("run --scenario " + scen + " --override bogus=1") == 2);
  CHECK(run_cli("frobnicate") != 0);
  fs::remove_all(out);
  fs::remove(trace);
}
