#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "advnet/adversary.hpp"
#include "advnet/metrics.hpp"
#include "advnet/schedulers.hpp"

namespace advnet {

using ScenarioJson = nlohmann::ordered_json;

// Validated experiment description. `document` is the JSON it was read from,
// echoed into manifests and re-read after overrides.
struct Scenario {
  ScenarioJson document;
  TraceMode mode = TraceMode::kStability;
  std::size_t rounds = 1000;
  std::uint64_t seed = 1;
  std::uint64_t trace_seed = 1;  // adversary.seed, defaults to seed
  TransmissionMode transmission = TransmissionMode::kDeterministic;
  Topology topology;
  AdversaryParams adversary;
  SchedulerConfig scheduler;
  double tradeoff = 1.0;  // V
  std::optional<double> path_constant;
  std::optional<double> path_exponent;
  std::vector<std::uint64_t> sweep_seeds;
};

// Throws ParseError naming the offending key (unknown keys included).
Scenario scenario_from_json(const ScenarioJson& doc);
Scenario scenario_from_text(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

// "a.b.c=value": value is read as JSON when it parses, else as a string.
void apply_override(ScenarioJson& doc, std::string_view assignment);
Scenario with_override(const Scenario& s, std::string_view assignment);
Scenario with_seed(const Scenario& s, std::uint64_t seed);

GeneratedTrace generate_scenario_trace(const Scenario& s);

struct RunSummary {
  std::size_t rounds = 0;
  double avg_queue = 0.0;
  double avg_queue_quarter = 0.0;  // running average at round T/4
  double avg_utility_gap = 0.0;
  double olo_regret = 0.0;
  double bco_regret = 0.0;
  std::size_t resets = 0;
  double max_alpha = 0.0;
  double final_lyapunov = 0.0;
  double drift_sum = 0.0;
  // Runtime invariant counters.
  std::size_t increment_violations = 0;
  std::size_t destination_violations = 0;
  std::size_t announcement_violations = 0;
  std::size_t alpha_violations = 0;
  std::size_t eta_order_violations = 0;
  std::size_t delta_identity_violations = 0;
  std::size_t infeasible_plays = 0;
  std::size_t telescoping_violations = 0;
  double max_increment = 0.0;
  double max_delta_identity_error = 0.0;
  std::size_t schedule_rounds = 0;
  bool privileged = false;

  std::size_t invariant_violations() const;
};

using MessageHandler = std::function<void(std::string_view)>;

struct RunResult {
  RunSummary summary;
  std::vector<RoundRecord> records;
  std::vector<std::string> warnings;
  std::string trace_hash;
};

// V sanity check for utility mode; empty when V <= min{T^(2 da / 3), T^(2 dl / 7)}.
std::optional<std::string> tradeoff_warning(double tradeoff, std::size_t rounds,
                                            double allocation_exponent, double arrival_exponent);

// Simulates the scenario on a pre-generated trace. Schedulers never receive
// the trace; they see only the per-round information the model allows.
RunResult run_scenario(const Scenario& s, const GeneratedTrace& trace,
                       const MessageHandler& on_warning = {});

// Writes rounds.csv and manifest.json into `dir` (created if missing).
void write_run_outputs(const std::filesystem::path& dir, const Scenario& s, const RunResult& r);

enum class SweepAxis { kTradeoff, kRounds, kSeed, kScheduler };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  std::string scheduler;
  double tradeoff = 0.0;
  std::size_t rounds = 0;
  std::string trace_hash;
  RunSummary summary;
  std::size_t warnings = 0;
};

// One run per value, crossed with the scenario's sweep seeds unless the axis
// is the seed itself. The trace is generated once from the base scenario and
// shared by every run, except along the rounds axis where each horizon gets
// its own trace from the same trace seed. Runs execute concurrently.
std::vector<SweepRow> run_sweep(const Scenario& base, SweepAxis axis,
                                const std::vector<std::string>& values,
                                const MessageHandler& on_warning = {});

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace advnet
