#include "advnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <iterator>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "advnet/error.hpp"
#include "advnet/trace_io.hpp"

namespace advnet {

namespace {

constexpr double kIncrementRelTol = 1e-12;
constexpr double kTelescopingRelTol = 1e-9;
constexpr double kDeltaIdentityRelTol = 1e-12;

// Typed access to one JSON object; remembers which keys were read so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const ScenarioJson& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(fmt::format("scenario key '{}' must be an object", where()));
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return read<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ParseError(fmt::format("scenario key '{}' is required", name(key)));
    return read<T>(key);
  }

  Section child(const std::string& key) {
    used_.insert(key);
    static const ScenarioJson kEmpty = ScenarioJson::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, name(key));
  }

  const ScenarioJson& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) throw ParseError(fmt::format("unknown scenario key '{}'", name(key)));
    }
  }

 private:
  template <class T>
  T read(const std::string& key) {
    used_.insert(key);
    const ScenarioJson& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw ParseError("expected a nonnegative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ParseError("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ParseError("expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ParseError("expected a string");
      }
      return v.get<T>();
    } catch (const std::exception& e) {
      throw ParseError(fmt::format("scenario key '{}': {}", name(key), e.what()));
    }
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const ScenarioJson& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("scenario key '{}': {}", key, e.what()));
  }
}

Topology read_topology(Section sec) {
  const std::string kind = sec.get<std::string>("kind", "line");
  const auto servers = sec.get<std::size_t>("servers", 3);
  const double cap = sec.get<double>("capacity_bound", 1.0);
  const double arr = sec.get<double>("arrival_bound", 1.0);
  Topology topo;
  try {
    if (kind == "line") {
      topo = Topology::line(servers, sec.get<bool>("bidirectional", true), cap, arr);
    } else if (kind == "custom") {
      std::vector<Link> links;
      for (const auto& l : sec.raw("links")) links.push_back({l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>()});
      topo = Topology(servers, std::move(links), cap, arr);
    } else {
      throw ParseError(fmt::format("unknown kind '{}'", kind));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(fmt::format("scenario key '{}': {}", sec.name("kind"), e.what()));
  }
  sec.finish();
  return topo;
}

AdversaryParams read_adversary(Section sec, TraceMode mode) {
  AdversaryParams p;
  p.family = keyed(sec.name("family"), [&] {
    return parse_capacity_family(sec.get<std::string>("family", "piecewise"));
  });
  p.phase_min = sec.get<std::size_t>("phase_min", p.phase_min);
  p.phase_max = sec.get<std::size_t>("phase_max", p.phase_max);
  p.capacity_lo = sec.get<double>("capacity_lo", p.capacity_lo);
  p.capacity_hi = sec.get<double>("capacity_hi", p.capacity_hi);
  p.drift_base = sec.get<double>("drift_base", p.drift_base);
  p.drift_amplitude = sec.get<double>("drift_amplitude", p.drift_amplitude);
  p.drift_period = sec.get<std::size_t>("drift_period", p.drift_period);
  p.jam_base = sec.get<double>("jam_base", p.jam_base);
  p.jam_probability = sec.get<double>("jam_probability", p.jam_probability);
  p.jam_length = sec.get<std::size_t>("jam_length", p.jam_length);
  p.window_length = sec.get<std::size_t>("window_length", p.window_length);
  if (sec.has("flows")) {
    for (const auto& f : sec.raw("flows")) {
      if (!f.is_array() || f.size() != 2) throw ParseError(fmt::format("scenario key '{}': each flow is [source, destination]", sec.name("flows")));
      p.flows.push_back({f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>()});
    }
  }
  p.flow_rates = sec.get<std::vector<double>>("flow_rates", {});
  p.arrival_jitter = sec.get<double>("arrival_jitter", 0.0);
  p.min_slack = sec.get<double>("min_slack", 0.0);
  p.allocation_exponent = sec.get<double>("allocation_exponent", p.allocation_exponent);
  p.arrival_exponent = sec.get<double>("arrival_exponent", p.arrival_exponent);

  Section util = sec.child("utility");
  p.utility_family = keyed(util.name("family"), [&] {
    return parse_utility_family(util.get<std::string>("family", "log"));
  });
  p.utility_weights = util.get<std::vector<double>>("weights", {});
  p.utility_curvature = util.get<std::vector<double>>("curvature", {});
  p.utility_amplitude = util.get<double>("amplitude", 0.0);
  p.utility_period = util.get<std::size_t>("period", p.utility_period);
  util.finish();

  Section set = sec.child("arrival_set");
  p.arrival_geometry = keyed(set.name("geometry"), [&] {
    return parse_set_geometry(set.get<std::string>("geometry", "box"));
  });
  p.arrival_lo = set.get<double>("lo", p.arrival_lo);
  p.arrival_hi = set.get<double>("hi", p.arrival_hi);
  p.arrival_center = set.get<std::vector<double>>("center", {});
  p.arrival_radius = set.get<double>("radius", 0.0);
  set.finish();

  if (mode == TraceMode::kUtility && p.utility_weights.size() != p.flows.size()) {
    throw ParseError(fmt::format("scenario key '{}': need one weight per flow",
                                 util.name("weights")));
  }
  sec.finish();
  return p;
}

LinkAllocationPlan read_plan(const ScenarioJson& j, const Topology& topo, const std::string& key) {
  try {
    LinkAllocationPlan plan(topo.link_count(), topo.servers());
    if (j.size() != topo.link_count()) throw ParseError("one row per link expected");
    for (std::size_t l = 0; l < topo.link_count(); ++l) {
      const auto row = j.at(l).get<std::vector<double>>();
      if (row.size() != topo.servers()) throw ParseError("one entry per commodity expected");
      std::copy(row.begin(), row.end(), plan.row(l).begin());
    }
    check_plan(plan, topo);
    return plan;
  } catch (const std::exception& e) {
    throw ParseError(fmt::format("scenario key '{}': {}", key, e.what()));
  }
}

double flow_inner(const QueueMatrix& q, std::span<const Flow> flows, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t f = 0; f < flows.size(); ++f) s += q(flows[f].source, flows[f].destination) * x[f];
  return s;
}

ScenarioJson summary_json(const RunSummary& s) {
  return {{"rounds", s.rounds},
          {"avg_queue", s.avg_queue},
          {"avg_queue_quarter", s.avg_queue_quarter},
          {"avg_utility_gap", s.avg_utility_gap},
          {"olo_regret", s.olo_regret},
          {"bco_regret", s.bco_regret},
          {"resets", s.resets},
          {"max_alpha", s.max_alpha},
          {"final_lyapunov", s.final_lyapunov},
          {"drift_sum", s.drift_sum},
          {"max_increment", s.max_increment},
          {"invariant_violations", s.invariant_violations()},
          {"privileged", s.privileged}};
}

}  // namespace

Scenario scenario_from_json(const ScenarioJson& doc) {
  Scenario s;
  s.document = doc;
  Section root(doc, "");
  s.mode = keyed("mode", [&] { return parse_trace_mode(root.get<std::string>("mode", "stability")); });
  s.rounds = root.get<std::size_t>("rounds", s.rounds);
  if (s.rounds == 0) throw ParseError("scenario key 'rounds' must be >= 1");
  s.seed = root.get<std::uint64_t>("seed", s.seed);
  s.transmission = keyed("transmission", [&] {
    return parse_transmission_mode(root.get<std::string>("transmission", "deterministic"));
  });
  s.topology = read_topology(root.child("topology"));

  Section adv = root.child("adversary");
  s.trace_seed = adv.get<std::uint64_t>("seed", s.seed);
  s.adversary = read_adversary(std::move(adv), s.mode);

  Section sched = root.child("scheduler");
  s.scheduler.kind = keyed(sched.name("kind"), [&] {
    return parse_scheduler_kind(sched.get<std::string>("kind", s.mode == TraceMode::kUtility ? "umo2" : "nso"));
  });
  s.scheduler.base_learner = keyed(sched.name("base_learner"), [&] {
    return parse_base_learner(sched.get<std::string>("base_learner", "step_grid"));
  });
  s.tradeoff = sched.get<double>("tradeoff", s.tradeoff);
  if (sched.has("path_constant")) s.path_constant = sched.get<double>("path_constant", 1.0);
  if (sched.has("path_exponent")) s.path_exponent = sched.get<double>("path_exponent", 0.25);
  if (sched.has("fixed_plan")) {
    s.scheduler.fixed_plan = read_plan(sched.raw("fixed_plan"), s.topology, sched.name("fixed_plan"));
  }
  sched.finish();
  if (s.scheduler.kind == SchedulerKind::kNso && s.mode != TraceMode::kStability) {
    throw ParseError("scenario key 'scheduler.kind': nso needs mode 'stability'");
  }
  if (s.scheduler.kind == SchedulerKind::kUmo2 && s.mode != TraceMode::kUtility) {
    throw ParseError("scenario key 'scheduler.kind': umo2 needs mode 'utility'");
  }
  if (s.scheduler.kind == SchedulerKind::kFixedPlan && !s.scheduler.fixed_plan) {
    throw ParseError("scenario key 'scheduler.fixed_plan' is required for fixed_plan");
  }
  s.sweep_seeds = root.get<std::vector<std::uint64_t>>("sweep_seeds", {s.seed});
  if (s.sweep_seeds.empty()) throw ParseError("scenario key 'sweep_seeds' must not be empty");
  root.finish();
  s.scheduler.seed = s.seed;
  return s;
}

Scenario scenario_from_text(std::string_view text) {
  ScenarioJson doc;
  try {
    doc = ScenarioJson::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(fmt::format("scenario is not valid JSON: {}", e.what()));
  }
  return scenario_from_json(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot read scenario {}", path.string()));
  const std::string text{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  return scenario_from_text(text);
}

void apply_override(ScenarioJson& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParseError(fmt::format("override '{}' is not key=value", assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  ScenarioJson value;
  try {
    value = ScenarioJson::parse(text);
  } catch (const std::exception&) {
    value = text;
  }
  ScenarioJson* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ParseError(fmt::format("override key '{}' has an empty segment", key));
    if (!node->is_object()) throw ParseError(fmt::format("override key '{}' descends into a non-object", key));
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = ScenarioJson::object();
    start = dot + 1;
  }
}

Scenario with_override(const Scenario& s, std::string_view assignment) {
  ScenarioJson doc = s.document;
  apply_override(doc, assignment);
  return scenario_from_json(doc);
}

Scenario with_seed(const Scenario& s, std::uint64_t seed) {
  ScenarioJson doc = s.document;
  doc["seed"] = seed;
  return scenario_from_json(doc);
}

GeneratedTrace generate_scenario_trace(const Scenario& s) {
  return generate_trace(s.topology, s.adversary, s.mode, s.rounds, s.trace_seed);
}

std::size_t RunSummary::invariant_violations() const {
  return increment_violations + destination_violations + announcement_violations +
         alpha_violations + eta_order_violations + delta_identity_violations + infeasible_plays +
         telescoping_violations;
}

std::optional<std::string> tradeoff_warning(double tradeoff, std::size_t rounds,
                                            double allocation_exponent, double arrival_exponent) {
  const double t = static_cast<double>(rounds);
  const double limit = std::min(std::pow(t, 2.0 * allocation_exponent / 3.0),
                                std::pow(t, 2.0 * arrival_exponent / 7.0));
  if (tradeoff <= limit) return std::nullopt;
  return fmt::format("V = {} exceeds min{{T^(2 da/3), T^(2 dl/7)}} = {:.4g} at T = {}", tradeoff,
                     limit, rounds);
}

RunResult run_scenario(const Scenario& s, const GeneratedTrace& generated,
                       const MessageHandler& on_warning) {
  const AdversaryTrace& trace = generated.trace;
  const ReferencePolicy& ref = generated.reference;
  if (trace.rounds() != s.rounds) {
    throw StructuralError(fmt::format("trace has {} rounds but the scenario asks for {}",
                                      trace.rounds(), s.rounds));
  }
  if (!(trace.topology == s.topology)) throw StructuralError("trace topology differs from the scenario");
  if (trace.mode != s.mode) throw StructuralError("trace mode differs from the scenario");

  RunResult result;
  result.trace_hash = content_hash(serialize_trace(trace, ref));
  auto warn = [&](std::string msg) {
    if (on_warning) on_warning(msg);
    result.warnings.push_back(std::move(msg));
  };

  const Topology& topo = trace.topology;
  const bool utility_mode = s.mode == TraceMode::kUtility;
  SchedulerContext ctx;
  ctx.topology = topo;
  ctx.mode = s.mode;
  ctx.horizon = s.rounds;
  ctx.flows = trace.flows;
  ctx.arrival_set = trace.arrival_set;
  if (utility_mode) {
    ScheduleConstants& c = ctx.constants;
    c.path_exponent = s.path_exponent.value_or(ref.arrival_budget.exponent);
    c.path_constant = s.path_constant.value_or(ref.arrival_budget.constant > 0.0 ? ref.arrival_budget.constant : 1.0);
    c.horizon = s.rounds;
    c.tradeoff = s.tradeoff;
    c.utility_bound = trace.utility_bound;
    c.lipschitz = trace.lipschitz;
    c.servers = topo.servers();
    c.capacity_bound = topo.capacity_bound();
    c.arrival_bound = topo.arrival_bound();
    if (auto w = tradeoff_warning(s.tradeoff, s.rounds, s.adversary.allocation_exponent,
                                  c.path_exponent)) {
      warn(*w);
    }
  }
  std::unique_ptr<Scheduler> scheduler = make_scheduler(s.scheduler, ctx);
  Rng channel(s.seed ^ 0x9e3779b97f4a7c15ULL);

  RunSummary& sum = result.summary;
  sum.rounds = s.rounds;
  sum.privileged = scheduler->privileged();
  result.records.reserve(s.rounds);
  const double increment_cap = topo.increment_bound() * (1.0 + kIncrementRelTol);
  const double vg = s.tradeoff * trace.utility_bound;
  const double vl = s.tradeoff * trace.lipschitz;
  const double dim = static_cast<double>(trace.flows.size());
  const std::size_t quarter = std::max<std::size_t>(s.rounds / 4, 1);

  QueueMatrix q = zero_queues(topo);
  double queue_total = 0.0;
  double gap_total = 0.0;
  double last_eta = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < s.rounds; ++t) {
    const CapacityMatrix& c = trace.capacities[t];
    PreDecisionInfo info;
    if (!utility_mode) info.arrivals = &trace.arrivals[t];
    if (scheduler->privileged()) info.capacity = &c;

    const SchedulerDecision d = scheduler->decide(q, info);
    check_plan(d.plan, topo);
    const RoundTelemetry& tele = scheduler->telemetry();
    if (tele.triple) {
      const ScheduleTriple& tr = *tele.triple;
      ++sum.schedule_rounds;
      sum.max_alpha = std::max(sum.max_alpha, tr.alpha);
      if (!(tr.alpha < 1.0)) ++sum.alpha_violations;
      if (!(tr.eta < last_eta)) ++sum.eta_order_violations;
      last_eta = tr.eta;
      const double mag = tele.queue_linf + vg;
      const double expect = tr.eta * dim * dim * mag * mag / (tele.queue_l2 + vl);
      const double err = std::abs(tr.delta * tr.delta * tr.delta - expect) / expect;
      sum.max_delta_identity_error = std::max(sum.max_delta_identity_error, err);
      if (err > kDeltaIdentityRelTol) ++sum.delta_identity_violations;
      if (!tele.played_feasible) ++sum.infeasible_plays;
    }

    const TransmissionMatrix mu = realize_transmissions(c, d.plan, s.transmission, topo, channel);
    double utility = 0.0;
    double ref_utility = 0.0;
    if (utility_mode) {
      const UtilitySpec g = trace.utility(t);
      const std::vector<double> ref_rates = flow_vector(ref.arrivals[t], trace.flows);
      utility = g.evaluate(d.flow_rates);
      ref_utility = g.evaluate(ref_rates);
      sum.bco_regret += (flow_inner(q, trace.flows, d.flow_rates) - s.tradeoff * utility) -
                        (flow_inner(q, trace.flows, ref_rates) - s.tradeoff * ref_utility);
      gap_total += ref_utility - utility;
    }
    sum.olo_regret += olo_regret_round(topo, c, q, d.plan, ref.allocations[t]);

    QueueMatrix next = step(q, mu, d.arrivals, topo);
    for (std::size_t i = 0; i < q.values().size(); ++i) {
      const double inc = std::abs(next.values()[i] - q.values()[i]);
      sum.max_increment = std::max(sum.max_increment, inc);
      if (inc > increment_cap) ++sum.increment_violations;
    }
    for (std::size_t k = 0; k < topo.servers(); ++k) {
      if (next(k, k) != 0.0) ++sum.destination_violations;
    }

    const RoundRecord rec = make_round_record(t + 1, q, next, utility, ref_utility, utility_mode ? s.tradeoff : 0.0);
    sum.drift_sum += rec.drift;
    queue_total += rec.l1_queue;
    if (t + 1 == quarter) sum.avg_queue_quarter = queue_total / static_cast<double>(quarter);
    result.records.push_back(rec);

    scheduler->observe(q, Feedback{c, mu, utility});
    sum.announcement_violations += scheduler->telemetry().announcement_violations;
    q = std::move(next);
  }

  const double rounds = static_cast<double>(s.rounds);
  sum.avg_queue = queue_total / rounds;
  sum.avg_utility_gap = gap_total / rounds;
  sum.resets = scheduler->resets();
  sum.final_lyapunov = 0.5 * queue_l2sq(q);
  const double scale = std::max(std::abs(sum.final_lyapunov), 1.0);
  if (std::abs(sum.drift_sum - sum.final_lyapunov) > kTelescopingRelTol * scale) {
    ++sum.telescoping_violations;
  }
  return result;
}

void write_run_outputs(const std::filesystem::path& dir, const Scenario& s, const RunResult& r) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  {
    std::ofstream csv(dir / "rounds.csv", std::ios::binary);
    if (!csv) throw IoError(fmt::format("cannot write {}", (dir / "rounds.csv").string()));
    write_round_csv(csv, r.records);
    if (!csv) throw IoError("rounds.csv write failed");
  }
  ScenarioJson manifest;
  manifest["scenario"] = s.document;
  manifest["seed"] = s.seed;
  manifest["trace_seed"] = s.trace_seed;
  manifest["scheduler"] = to_string(s.scheduler.kind);
  manifest["trace_hash"] = r.trace_hash;
  manifest["summary"] = summary_json(r.summary);
  manifest["warnings"] = r.warnings;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", (dir / "manifest.json").string()));
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("manifest.json write failed");
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "V") return SweepAxis::kTradeoff;
  if (name == "T") return SweepAxis::kRounds;
  if (name == "seed") return SweepAxis::kSeed;
  if (name == "scheduler") return SweepAxis::kScheduler;
  throw ParseError(fmt::format("unknown sweep axis '{}' (expected V, T, seed or scheduler)", name));
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kTradeoff: return "V";
    case SweepAxis::kRounds: return "T";
    case SweepAxis::kSeed: return "seed";
    case SweepAxis::kScheduler: return "scheduler";
  }
  return "?";
}

std::vector<SweepRow> run_sweep(const Scenario& base, SweepAxis axis,
                                const std::vector<std::string>& values,
                                const MessageHandler& on_warning) {
  if (values.empty()) throw ContractViolation("sweep needs at least one value");
  const char* key = nullptr;
  switch (axis) {
    case SweepAxis::kTradeoff: key = "scheduler.tradeoff"; break;
    case SweepAxis::kRounds: key = "rounds"; break;
    case SweepAxis::kSeed: key = "seed"; break;
    case SweepAxis::kScheduler: key = "scheduler.kind"; break;
  }
  // Pin the trace seed so changing the run seed never changes the trace.
  const Scenario pinned = with_override(base, fmt::format("adversary.seed={}", base.trace_seed));

  struct Job {
    Scenario scenario;
    std::string value;
    std::size_t trace_index;
  };
  std::vector<Job> jobs;
  std::vector<GeneratedTrace> traces;
  if (axis != SweepAxis::kRounds) traces.push_back(generate_scenario_trace(pinned));
  for (const std::string& v : values) {
    const Scenario at_value = with_override(pinned, fmt::format("{}={}", key, v));
    std::size_t trace_index = 0;
    if (axis == SweepAxis::kRounds) {
      traces.push_back(generate_scenario_trace(at_value));
      trace_index = traces.size() - 1;
    }
    if (axis == SweepAxis::kSeed) {
      jobs.push_back({at_value, v, trace_index});
    } else {
      for (std::uint64_t seed : base.sweep_seeds) {
        jobs.push_back({with_seed(at_value, seed), v, trace_index});
      }
    }
  }

  std::vector<SweepRow> rows(jobs.size());
  std::vector<std::string> hashes(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    hashes[i] = content_hash(serialize_trace(traces[i].trace, traces[i].reference));
  }
  std::mutex warn_mutex;
  MessageHandler guarded;
  if (on_warning) {
    guarded = [&](std::string_view m) {
      std::lock_guard lock(warn_mutex);
      on_warning(m);
    };
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Job& job = jobs[i];
        RunResult r = run_scenario(job.scenario, traces[job.trace_index], guarded);
        SweepRow& row = rows[i];
        row.value = job.value;
        row.seed = job.scenario.seed;
        row.scheduler = std::string(to_string(job.scenario.scheduler.kind));
        row.tradeoff = job.scenario.tradeoff;
        row.rounds = job.scenario.rounds;
        row.trace_hash = hashes[job.trace_index];
        row.summary = r.summary;
        row.warnings = r.warnings.size();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(jobs.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "value,seed,scheduler,V,T,trace_hash,avg_queue,avg_queue_quarter,avg_utility_gap,"
      "olo_regret,bco_regret,resets,max_alpha,invariant_violations,warnings\n";
  for (const SweepRow& r : rows) {
    const RunSummary& s = r.summary;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.value, r.seed,
                       r.scheduler, format_decimal(r.tradeoff), r.rounds, r.trace_hash,
                       format_decimal(s.avg_queue), format_decimal(s.avg_queue_quarter),
                       format_decimal(s.avg_utility_gap), format_decimal(s.olo_regret),
                       format_decimal(s.bco_regret), s.resets, format_decimal(s.max_alpha),
                       s.invariant_violations(), r.warnings);
  }
  return out;
}

}  // namespace advnet
