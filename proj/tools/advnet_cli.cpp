#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advnet/advnet.h"

namespace {

void print_warning(const char* message, void*) { std::fprintf(stderr, "warning: %s\n", message); }

int report(advnet_status status, const char* what) {
  if (status == ADVNET_OK) return 0;
  std::fprintf(stderr, "error: %s: %s\n", what, advnet_last_error());
  return 2;
}

struct ScenarioOptions {
  std::string path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

void add_scenario_options(CLI::App* cmd, ScenarioOptions& o) {
  cmd->add_option("--scenario", o.path, "scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "run seed")->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--override", o.overrides, "key=value, dotted keys, repeatable");
}

// Returns null after printing the error.
advnet_scenario* open_scenario(const ScenarioOptions& o) {
  advnet_scenario* s = nullptr;
  if (report(advnet_scenario_load(o.path.c_str(), &s), "scenario") != 0) return nullptr;
  for (const std::string& ov : o.overrides) {
    if (report(advnet_scenario_override(s, ov.c_str()), "override") != 0) {
      advnet_scenario_free(s);
      return nullptr;
    }
  }
  if (o.seed_set && report(advnet_scenario_set_seed(s, o.seed), "seed") != 0) {
    advnet_scenario_free(s);
    return nullptr;
  }
  return s;
}

int cmd_run(const ScenarioOptions& o, const std::string& trace_path, const std::string& out) {
  advnet_scenario* s = open_scenario(o);
  if (!s) return 2;
  advnet_trace* trace = nullptr;
  if (!trace_path.empty() && report(advnet_trace_load(trace_path.c_str(), &trace), "trace") != 0) {
    advnet_scenario_free(s);
    return 2;
  }
  advnet_run_summary sum{};
  const int rc = report(advnet_run(s, trace, out.empty() ? nullptr : out.c_str(), &sum), "run");
  advnet_trace_free(trace);
  advnet_scenario_free(s);
  if (rc != 0) return rc;
  std::printf("rounds %zu\navg_queue %.12g\navg_utility_gap %.12g\nolo_regret %.12g\n"
              "bco_regret %.12g\nresets %zu\nmax_alpha %.12g\ninvariant_violations %zu\n"
              "trace_hash %s\n",
              sum.rounds, sum.avg_queue, sum.avg_utility_gap, sum.olo_regret, sum.bco_regret,
              sum.resets, sum.max_alpha, sum.invariant_violations, sum.trace_hash);
  return sum.invariant_violations == 0 ? 0 : 1;
}

int cmd_sweep(const ScenarioOptions& o, const std::string& axis,
              const std::vector<std::string>& values, const std::string& out) {
  advnet_scenario* s = open_scenario(o);
  if (!s) return 2;
  std::vector<const char*> raw;
  for (const std::string& v : values) raw.push_back(v.c_str());
  advnet_sweep_result res{};
  const int rc = report(advnet_sweep(s, axis.c_str(), raw.data(), raw.size(),
                                     out.empty() ? nullptr : out.c_str(), &res),
                        "sweep");
  advnet_scenario_free(s);
  if (rc != 0) return rc;
  std::printf("runs %zu\nruns_with_violations %zu\n", res.runs, res.runs_with_violations);
  return res.runs_with_violations == 0 ? 0 : 1;
}

int cmd_gen_trace(const ScenarioOptions& o, const std::string& out) {
  advnet_scenario* s = open_scenario(o);
  if (!s) return 2;
  advnet_trace* t = nullptr;
  int rc = report(advnet_trace_generate(s, &t), "generate");
  advnet_scenario_free(s);
  if (rc != 0) return rc;
  char hash[41];
  rc = report(advnet_trace_save(t, out.c_str()), "save");
  if (rc == 0) rc = report(advnet_trace_hash(t, hash), "hash");
  advnet_trace_free(t);
  if (rc == 0) std::printf("trace_hash %s\n", hash);
  return rc;
}

int cmd_verify_trace(const std::string& path) {
  advnet_trace* t = nullptr;
  if (report(advnet_trace_load(path.c_str(), &t), "trace") != 0) return 2;
  advnet_trace_verdict v{};
  const int rc = report(advnet_trace_verify(t, &v), "verify");
  advnet_trace_free(t);
  if (rc != 0) return rc;
  if (v.accepted) {
    std::printf("accept slack %.12g\n", v.slack);
  } else {
    std::printf("reject window %zu server %zu commodity %zu deficit %.12g\n", v.window, v.server,
                v.commodity, v.deficit);
  }
  std::printf("invariant_problems %zu\n", v.invariant_problems);
  return v.accepted && v.invariant_problems == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial multi-hop network scheduling simulator"};
  app.require_subcommand(1);
  advnet_set_message_handler(print_warning, nullptr);

  ScenarioOptions run_opts;
  std::string run_trace;
  std::string run_out;
  CLI::App* run = app.add_subcommand("run", "simulate one scenario");
  add_scenario_options(run, run_opts);
  run->add_option("--trace", run_trace, "pre-generated trace file")->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory for rounds.csv and manifest.json");

  ScenarioOptions sweep_opts;
  std::string axis;
  std::vector<std::string> values;
  std::string sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "one run per axis value");
  add_scenario_options(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "V, T, seed or scheduler")->required();
  sweep->add_option("--values", values, "axis values")->required()->delimiter(',');
  sweep->add_option("--out", sweep_out, "output directory for sweep.csv");

  ScenarioOptions gen_opts;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-trace", "generate and save the scenario's trace");
  add_scenario_options(gen, gen_opts);
  gen->add_option("--out", gen_out, "trace file to write")->required();

  std::string verify_path;
  CLI::App* verify = app.add_subcommand("verify-trace", "check a trace against its reference");
  verify->add_option("--trace", verify_path, "trace file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (run->parsed()) return cmd_run(run_opts, run_trace, run_out);
  if (sweep->parsed()) return cmd_sweep(sweep_opts, axis, values, sweep_out);
  if (gen->parsed()) return cmd_gen_trace(gen_opts, gen_out);
  return cmd_verify_trace(verify_path);
}
