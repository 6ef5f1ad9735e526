#include "advnet/advnet.h"

#include <cstring>
#include <fstream>
#include <mutex>
#include <string>

#include "advnet/error.hpp"
#include "advnet/harness.hpp"
#include "advnet/trace_io.hpp"

struct advnet_scenario {
  advnet::Scenario scenario;
};

struct advnet_trace {
  advnet::GeneratedTrace generated;
};

namespace {

thread_local std::string last_error;

std::mutex handler_mutex;
advnet_message_fn handler_fn = nullptr;
void* handler_user = nullptr;

void emit(std::string_view message) {
  std::lock_guard lock(handler_mutex);
  if (handler_fn) handler_fn(std::string(message).c_str(), handler_user);
}

advnet_status fail(advnet_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class F>
advnet_status guarded(F&& body) {
  try {
    body();
    return ADVNET_OK;
  } catch (const advnet::ParseError& e) {
    return fail(ADVNET_PARSE, e.what());
  } catch (const advnet::IoError& e) {
    return fail(ADVNET_IO, e.what());
  } catch (const advnet::ConstructionError& e) {
    return fail(ADVNET_CONSTRUCTION, e.what());
  } catch (const advnet::ContractViolation& e) {
    return fail(ADVNET_CONTRACT, e.what());
  } catch (const advnet::InvariantFailure& e) {
    return fail(ADVNET_INVARIANT, e.what());
  } catch (const advnet::StructuralError& e) {
    return fail(ADVNET_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(ADVNET_INTERNAL, e.what());
  } catch (...) {
    return fail(ADVNET_INTERNAL, "unknown failure");
  }
}

void copy_hash(const std::string& hash, char out[41]) {
  std::memset(out, 0, 41);
  std::memcpy(out, hash.data(), std::min<std::size_t>(hash.size(), 40));
}

}  // namespace

extern "C" {

void advnet_set_message_handler(advnet_message_fn fn, void* user) {
  std::lock_guard lock(handler_mutex);
  handler_fn = fn;
  handler_user = user;
}

const char* advnet_last_error(void) { return last_error.c_str(); }

const char* advnet_version(void) { return "0.1.0"; }

advnet_status advnet_scenario_load(const char* path, advnet_scenario** out) {
  if (!path || !out) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new advnet_scenario{advnet::load_scenario(path)}; });
}

advnet_status advnet_scenario_from_string(const char* json, advnet_scenario** out) {
  if (!json || !out) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new advnet_scenario{advnet::scenario_from_text(json)}; });
}

advnet_status advnet_scenario_override(advnet_scenario* s, const char* assignment) {
  if (!s || !assignment) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] { s->scenario = advnet::with_override(s->scenario, assignment); });
}

advnet_status advnet_scenario_set_seed(advnet_scenario* s, uint64_t seed) {
  if (!s) return fail(ADVNET_INVALID_ARGUMENT, "null scenario");
  return guarded([&] { s->scenario = advnet::with_seed(s->scenario, seed); });
}

void advnet_scenario_free(advnet_scenario* s) { delete s; }

advnet_status advnet_trace_generate(const advnet_scenario* s, advnet_trace** out) {
  if (!s || !out) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new advnet_trace{advnet::generate_scenario_trace(s->scenario)}; });
}

advnet_status advnet_trace_load(const char* path, advnet_trace** out) {
  if (!path || !out) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new advnet_trace{advnet::load_trace(path)}; });
}

advnet_status advnet_trace_save(const advnet_trace* t, const char* path) {
  if (!t || !path) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded(
      [&] { advnet::save_trace(path, t->generated.trace, t->generated.reference); });
}

advnet_status advnet_trace_verify(const advnet_trace* t, advnet_trace_verdict* out) {
  if (!t || !out) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& g = t->generated;
    const advnet::StabilityVerdict v =
        advnet::verify_piecewise_stability(g.trace, g.reference, g.trace.topology);
    out->accepted = v.accepted ? 1 : 0;
    out->slack = v.slack;
    out->window = v.window;
    out->server = v.server;
    out->commodity = v.commodity;
    out->deficit = v.deficit;
    const auto problems = advnet::check_reference_invariants(g.trace, g.reference);
    out->invariant_problems = problems.size();
    for (const std::string& p : problems) emit(p);
  });
}

advnet_status advnet_trace_hash(const advnet_trace* t, char out[41]) {
  if (!t || !out) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    copy_hash(advnet::content_hash(
                  advnet::serialize_trace(t->generated.trace, t->generated.reference)),
              out);
  });
}

void advnet_trace_free(advnet_trace* t) { delete t; }

advnet_status advnet_run(const advnet_scenario* s, const advnet_trace* trace, const char* out_dir,
                         advnet_run_summary* out) {
  if (!s || !out) return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    advnet::GeneratedTrace generated;
    if (!trace) generated = advnet::generate_scenario_trace(s->scenario);
    const advnet::GeneratedTrace& used = trace ? trace->generated : generated;
    const advnet::RunResult r = advnet::run_scenario(s->scenario, used, emit);
    if (out_dir) advnet::write_run_outputs(out_dir, s->scenario, r);
    const advnet::RunSummary& m = r.summary;
    out->rounds = m.rounds;
    out->avg_queue = m.avg_queue;
    out->avg_queue_quarter = m.avg_queue_quarter;
    out->avg_utility_gap = m.avg_utility_gap;
    out->olo_regret = m.olo_regret;
    out->bco_regret = m.bco_regret;
    out->resets = m.resets;
    out->max_alpha = m.max_alpha;
    out->final_lyapunov = m.final_lyapunov;
    out->drift_sum = m.drift_sum;
    out->max_increment = m.max_increment;
    out->invariant_violations = m.invariant_violations();
    out->warnings = r.warnings.size();
    out->privileged = m.privileged ? 1 : 0;
    copy_hash(r.trace_hash, out->trace_hash);
  });
}

advnet_status advnet_sweep(const advnet_scenario* s, const char* axis, const char* const* values,
                           size_t count, const char* out_dir, advnet_sweep_result* out) {
  if (!s || !axis || !out || (count > 0 && !values)) {
    return fail(ADVNET_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    std::vector<std::string> vals;
    for (size_t i = 0; i < count; ++i) {
      if (!values[i]) throw advnet::StructuralError("null sweep value");
      vals.emplace_back(values[i]);
    }
    const auto rows = advnet::run_sweep(s->scenario, advnet::parse_sweep_axis(axis), vals, emit);
    if (out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (ec) throw advnet::IoError(std::string("cannot create ") + out_dir);
      std::ofstream f(std::filesystem::path(out_dir) / "sweep.csv", std::ios::binary);
      if (!f) throw advnet::IoError(std::string("cannot write sweep.csv in ") + out_dir);
      f << advnet::sweep_csv(rows);
    }
    out->runs = rows.size();
    out->runs_with_violations = 0;
    for (const auto& r : rows) {
      if (r.summary.invariant_violations() > 0) ++out->runs_with_violations;
    }
  });
}

}  // extern "C"
