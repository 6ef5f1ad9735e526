#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "advnet/error.hpp"
#include "advnet/harness.hpp"

using namespace advnet;

namespace {

constexpr const char* kStability = R"({
  "mode": "stability",
  "rounds": 300,
  "seed": 5,
  "transmission": "bernoulli",
  "topology": {"kind": "line", "servers": 3},
  "adversary": {"phase_min": 20, "phase_max": 60, "flows": [[0, 2], [2, 0]],
                "flow_rates": [0.15, 0.15], "arrival_jitter": 0.05, "min_slack": 0.3},
  "scheduler": {"kind": "nso"},
  "sweep_seeds": [1, 2]
})";

constexpr const char* kUtility = R"({
  "mode": "utility",
  "rounds": 300,
  "seed": 5,
  "topology": {"kind": "line", "servers": 3},
  "adversary": {"phase_min": 20, "phase_max": 60, "flows": [[0, 2], [2, 0]], "min_slack": 0.1,
                "utility": {"family": "log", "weights": [1, 1], "amplitude": 0.2, "period": 100},
                "arrival_set": {"geometry": "box", "lo": 0, "hi": 1}},
  "scheduler": {"kind": "umo2", "tradeoff": 2}
})";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string parse_error(std::string_view text) {
  try {
    scenario_from_text(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("one-round run writes one csv row") {
  Scenario s = scenario_from_text(R"({"mode": "stability", "rounds": 1,
    "topology": {"kind": "line", "servers": 2},
    "adversary": {"flows": [[0, 1]], "flow_rates": [0.3]}})");
  const RunResult r = run_scenario(s, generate_scenario_trace(s));
  CHECK(r.records.size() == 1);
  const auto dir = std::filesystem::temp_directory_path() / "advnet_unit_one";
  write_run_outputs(dir, s, r);
  const std::string csv = read_file(dir / "rounds.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical scenarios give identical csv bytes") {
  for (const char* text : {kStability, kUtility}) {
    const Scenario s = scenario_from_text(text);
    const auto a = std::filesystem::temp_directory_path() / "advnet_unit_a";
    const auto b = std::filesystem::temp_directory_path() / "advnet_unit_b";
    write_run_outputs(a, s, run_scenario(s, generate_scenario_trace(s)));
    write_run_outputs(b, s, run_scenario(s, generate_scenario_trace(s)));
    CHECK(read_file(a / "rounds.csv") == read_file(b / "rounds.csv"));
    CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
  }
}

TEST_CASE("runs hold every runtime invariant") {
  for (const char* text : {kStability, kUtility}) {
    const Scenario s = scenario_from_text(text);
    const RunResult r = run_scenario(s, generate_scenario_trace(s));
    CHECK(r.summary.invariant_violations() == 0);
    CHECK(r.summary.drift_sum >= 0.0);
    CHECK(r.summary.max_increment <= s.topology.increment_bound());
  }
}

TEST_CASE("tradeoff warning") {
  // T = 10^4 with exponents 1/4: min{T^(1/6), T^(1/14)} = 10^(2/7) ~ 1.93.
  CHECK_FALSE(tradeoff_warning(1.9, 10000, 0.25, 0.25).has_value());
  CHECK(tradeoff_warning(2.0, 10000, 0.25, 0.25).has_value());
  Scenario s = with_override(scenario_from_text(kUtility), "scheduler.tradeoff=300");
  std::vector<std::string> seen;
  const RunResult r = run_scenario(s, generate_scenario_trace(s),
                                   [&](std::string_view m) { seen.emplace_back(m); });
  CHECK(seen.size() == 1);
  CHECK(r.warnings.size() == 1);
  CHECK(r.records.size() == 300);
}

TEST_CASE("scenario errors name the key") {
  CHECK(parse_error(R"({"rounds": 0})").find("rounds") != std::string::npos);
  CHECK(parse_error(R"({"rounds": "many"})").find("rounds") != std::string::npos);
  CHECK(parse_error(R"({"scheduler": {"kind": "nso", "colour": 1}})").find("scheduler.colour") !=
        std::string::npos);
  CHECK(parse_error(R"({"adversary": {"family": "storm"}})").find("adversary.family") !=
        std::string::npos);
  CHECK(parse_error("{").size() > 0);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), IoError);
}

TEST_CASE("overrides") {
  const Scenario s = scenario_from_text(kStability);
  CHECK(with_override(s, "rounds=50").rounds == 50);
  CHECK(with_override(s, "scheduler.kind=uniform_random").scheduler.kind ==
        SchedulerKind::kUniformRandom);
  CHECK(with_override(s, "adversary.seed=77").trace_seed == 77);
  CHECK(with_seed(s, 9).seed == 9);
  CHECK_THROWS_AS(with_override(s, "rounds"), ParseError);
  CHECK_THROWS_AS(with_override(s, "topology.colour=3"), ParseError);
}

TEST_CASE("sweeps") {
  const Scenario s = scenario_from_text(kStability);
  SUBCASE("seed axis") {
    const auto rows = run_sweep(s, SweepAxis::kSeed, {"1", "2", "3"});
    CHECK(rows.size() == 3);
  }
  SUBCASE("scheduler axis shares one trace") {
    const auto rows = run_sweep(s, SweepAxis::kScheduler, {"nso", "uniform_random"});
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK(r.trace_hash == rows.front().trace_hash);
  }
  SUBCASE("tradeoff axis in utility mode") {
    const auto rows = run_sweep(scenario_from_text(kUtility), SweepAxis::kTradeoff, {"5", "10", "20"});
    CHECK(rows.size() == 3);
    const std::string csv = sweep_csv(rows);
    CHECK(csv.substr(0, csv.find('\n')).find("avg_utility_gap") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }
  SUBCASE("rounds axis") {
    const auto rows = run_sweep(s, SweepAxis::kRounds, {"100", "200"});
    REQUIRE(rows.size() == 4);
    CHECK(rows.front().rounds == 100);
  }
  CHECK_THROWS_AS(parse_sweep_axis("colour"), ParseError);
}
