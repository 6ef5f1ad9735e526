// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "advnet/adversary.hpp"
#include "advnet/bco.hpp"
#include "advnet/harness.hpp"
#include "advnet/metrics.hpp"
#include "advnet/olo.hpp"
#include "advnet/trace_io.hpp"

using namespace advnet;

namespace {

const std::string kScenarioDir = ADVNET_SCENARIO_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, std::string note) {
    if (!ok) pass = false;
    notes.push_back((ok ? "  ok   " : "  FAIL ") + std::move(note));
  }
};

// Runtime invariants gathered from every simulation the suite performs.
struct InvariantTally {
  std::size_t runs = 0;
  std::size_t schedule_rounds = 0;
  std::size_t alpha = 0;
  std::size_t eta_order = 0;
  std::size_t delta_identity = 0;
  double max_delta_error = 0.0;
  std::size_t steps = 0;
  std::size_t increment = 0;
  std::size_t destination = 0;
  std::size_t telescoping = 0;
  std::size_t announcement = 0;
  std::size_t infeasible = 0;
  double worst_increment_ratio = 0.0;

  void add(const Scenario& s, const RunSummary& m) {
    ++runs;
    schedule_rounds += m.schedule_rounds;
    alpha += m.alpha_violations;
    eta_order += m.eta_order_violations;
    delta_identity += m.delta_identity_violations;
    max_delta_error = std::max(max_delta_error, m.max_delta_identity_error);
    steps += m.rounds;
    increment += m.increment_violations;
    destination += m.destination_violations;
    telescoping += m.telescoping_violations;
    announcement += m.announcement_violations;
    infeasible += m.infeasible_plays;
    worst_increment_ratio =
        std::max(worst_increment_ratio, m.max_increment / s.topology.increment_bound());
  }
};

InvariantTally tally;

RunResult run(const Scenario& s) {
  const RunResult r = run_scenario(s, generate_scenario_trace(s));
  tally.add(s, r.summary);
  return r;
}

Scenario seeded(const Scenario& base, std::uint64_t seed) {
  return with_override(with_seed(base, seed), fmt::format("adversary.seed={}", seed));
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// 1. Stability of NSO on a certified piecewise-stationary trace.
Outcome stability() {
  Outcome o;
  Scenario base = with_override(load_scenario(kScenarioDir + "/stability_line.json"), "rounds=200000");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = seeded(base, seed);
    const GeneratedTrace g = generate_scenario_trace(s);
    const StabilityVerdict v = verify_piecewise_stability(g.trace, g.reference, s.topology);
    o.require(v.accepted && g.reference.slack >= 0.3,
              fmt::format("seed {}: trace certified with eps_W = {:.4f} (>= 0.3)", seed,
                          g.reference.slack));
    const RunResult r = run_scenario(s, g);
    tally.add(s, r.summary);
    const double ratio = r.summary.avg_queue / r.summary.avg_queue_quarter;
    o.require(ratio <= 1.5, fmt::format("seed {}: nso A(T) = {:.4f}, A(T/4) = {:.4f}, ratio {:.3f} <= 1.5",
                                        seed, r.summary.avg_queue, r.summary.avg_queue_quarter, ratio));
  }
  // Two flows of 0.2 share link 1 -> 2, which uniform allocation serves at about 0.32.
  Scenario control = base;
  for (const char* ov : {"adversary.flows=[[0,2],[1,2]]", "adversary.flow_rates=[0.2,0.2]",
                         "adversary.min_slack=0", "scheduler.kind=uniform_random"}) {
    control = with_override(control, ov);
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunResult r = run(seeded(control, seed));
    const double ratio = r.summary.avg_queue / r.summary.avg_queue_quarter;
    o.require(ratio >= 2.0, fmt::format("seed {}: uniform_random control ratio {:.3f} >= 2", seed, ratio));
  }
  return o;
}

// Counts adjacent pairs that break the expected order; an inversion within one
// standard error of the difference is tolerated once.
void check_trend(Outcome& o, const std::string& what, const std::vector<double>& vs,
                 const std::vector<std::vector<double>>& samples, bool increasing) {
  std::size_t hard = 0, soft = 0;
  std::string line = what + ":";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    line += fmt::format(" V={} {:.4f}+-{:.4f}", vs[i], mean(samples[i]), standard_error(samples[i]));
  }
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double diff = mean(samples[i + 1]) - mean(samples[i]);
    const double wrong = increasing ? -diff : diff;
    if (wrong <= 0.0) continue;
    const double se = std::hypot(standard_error(samples[i]), standard_error(samples[i + 1]));
    if (wrong <= se) ++soft;
    else ++hard;
  }
  o.require(hard == 0 && soft <= 1,
            fmt::format("{} ({} {}; inversions beyond 1 SE {}, within {})", line,
                        increasing ? "nondecreasing" : "nonincreasing", "in V", hard, soft));
}

// 2. Utility/queue trade-off of UMO2 in V.
Outcome tradeoff() {
  Outcome o;
  const Scenario base = with_override(load_scenario(kScenarioDir + "/utility_line.json"), "rounds=100000");
  const std::vector<double> vs{5, 10, 20};
  std::vector<std::vector<double>> gaps(vs.size()), queues(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Scenario s = with_override(seeded(base, seed), fmt::format("scheduler.tradeoff={}", vs[i]));
      const RunResult r = run(s);
      gaps[i].push_back(r.summary.avg_utility_gap);
      queues[i].push_back(r.summary.avg_queue);
    }
  }
  check_trend(o, "avg_utility_gap", vs, gaps, false);
  check_trend(o, "avg_queue", vs, queues, true);
  return o;
}

// 3. AdaPFOL dynamic regret scaling and doubling count.
struct OloStream {
  double normalized = 0.0;
  double path = 0.0;
};

OloStream olo_stream(std::size_t T, std::uint64_t seed) {
  constexpr std::size_t kDim = 4;
  constexpr double kDiameter = 2.0;  // l1 diameter of the simplex
  Rng rng(seed);
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  const auto switches = static_cast<std::size_t>(
      std::max(1.0, std::round(std::pow(static_cast<double>(T), 0.25) / 2.0)));
  const std::size_t segment = T / (switches + 1);
  AdaPFOL learner(make_base_learner_factory(BaseLearnerKind::kStepGrid, kDim, T));
  std::vector<std::vector<double>> losses, actions, comparators;
  double sq = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t vertex = std::min(t / segment, switches) % kDim;
    std::vector<double> comp(kDim, 0.0);
    comp[vertex] = 1.0;
    std::vector<double> g(kDim);
    for (std::size_t i = 0; i < kDim; ++i) g[i] = 0.5 * (1.0 - comp[i]) + 0.5 * noise(rng);
    const double gn = linf_norm(g);
    learner.announce_bound(std::max(gn, 1e-12));
    actions.push_back(learner.act());
    learner.feed(g);
    sq += gn * gn;
    losses.push_back(std::move(g));
    comparators.push_back(std::move(comp));
  }
  OloStream out;
  out.path = path_length(comparators);
  const double regret = measure_dynamic_regret(losses, actions, comparators);
  out.normalized = regret / (std::sqrt(kDiameter * (kDiameter + out.path)) * std::sqrt(sq));
  return out;
}

Outcome olo_regret() {
  Outcome o;
  std::vector<double> means;
  for (std::size_t T : {std::size_t{1000}, std::size_t{10000}}) {
    std::vector<double> v;
    double path = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const OloStream s = olo_stream(T, seed);
      v.push_back(s.normalized);
      path = s.path;
    }
    means.push_back(mean(v));
    o.require(means.back() <= 20.0,
              fmt::format("T = {}: P_T = {}, normalized D-Regret {:.4f} +- {:.4f} <= 20", T, path,
                          means.back(), standard_error(v)));
  }
  o.require(means[1] <= means[0],
            fmt::format("nonincreasing in T: {:.4f} -> {:.4f}", means[0], means[1]));

  // Doubling on streams whose magnitudes grow.
  const std::vector<std::pair<std::string, std::function<double(std::size_t)>>> streams{
      {"linear", [](std::size_t t) { return 0.5 + 0.37 * static_cast<double>(t); }},
      {"quadratic", [](std::size_t t) { return 1e-3 * std::pow(static_cast<double>(t + 1), 2.0); }},
      {"geometric", [](std::size_t t) { return std::pow(1.013, static_cast<double>(t)); }},
      {"sawtooth", [](std::size_t t) { return static_cast<double>(t % 97 + 1) * std::sqrt(static_cast<double>(t + 1)); }},
      {"steps", [](std::size_t t) { return std::pow(10.0, static_cast<double>(t / 250)); }}};
  for (const auto& [name, magnitude] : streams) {
    AdaPFOL a(make_base_learner_factory(BaseLearnerKind::kStepGrid, 4, 2000));
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double max_g = 0.0;
    for (std::size_t t = 0; t < 2000; ++t) {
      const double g = magnitude(t);
      max_g = std::max(max_g, g);
      a.announce_bound(g);
      std::vector<double> loss(4);
      for (double& x : loss) x = g * u(rng);
      loss[t % 4] = g;
      a.feed(loss);
    }
    const double cap = std::ceil(std::log2(max_g)) + 1.0;
    o.require(static_cast<double>(a.resets()) <= cap,
              fmt::format("{} stream: {} resets <= ceil(log2 {:.4g}) + 1 = {}", name, a.resets(),
                          max_g, cap));
  }
  return o;
}

// 4. AdaBGD on a fixed quadratic and estimator unbiasedness.
Outcome bandit() {
  Outcome o;
  constexpr std::size_t kT = 50000;
  constexpr double kEta0 = 0.05;
  constexpr double kDelta0 = 0.25;
  const std::vector<double> target{0.25, -0.2, 0.15, 0.1};
  auto loss = [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - target[i]) * (x[i] - target[i]);
    return s;
  };
  std::vector<double> gaps;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    AdaBGD bgd(BallSandwichedSet::box(4, -0.5, 0.5));
    Rng rng(seed);
    double max_alpha = 0.0;
    double tail = 0.0;
    for (std::size_t t = 1; t <= kT; ++t) {
      const ScheduleTriple tr = polynomial_schedule(t, kEta0, kDelta0, 0.5);
      max_alpha = std::max(max_alpha, tr.alpha);
      const AdaBGD::Play p = bgd.act(tr, rng);
      const double value = loss(p.point);
      if (t > kT - kT / 10) tail += value;
      bgd.feed(tr, value, p.direction);
    }
    tail /= static_cast<double>(kT / 10);
    // Minimum of the loss over the shrunk box: clip the target coordinatewise.
    const double half = 0.5 * (1.0 - max_alpha);
    std::vector<double> clipped(target);
    for (double& c : clipped) c = std::clamp(c, -half, half);
    const double best = loss(clipped);
    gaps.push_back(tail - best);
    o.require(tail - best <= 0.05,
              fmt::format("seed {}: last-T/10 loss {:.5f}, min over (1 - {:.3f})X {:.5f}, gap {:.5f} <= 0.05",
                          seed, tail, max_alpha, best, tail - best));
  }
  Rng rng(99);
  const std::vector<double> slope{0.7, -1.3, 0.4, 2.0};
  const std::vector<double> y{0.1, -0.1, 0.05, 0.0};
  const EstimatorMean est = gradient_estimator_mean(
      [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += slope[i] * x[i];
        return s;
      },
      y, 0.2, 100000, rng);
  for (std::size_t i = 0; i < slope.size(); ++i) {
    const double z = std::abs(est.mean[i] - slope[i]) / est.standard_error[i];
    o.require(z <= 5.0, fmt::format("estimator coordinate {}: mean {:.4f} vs {:.4f}, {:.2f} SE <= 5", i,
                                    est.mean[i], slope[i], z));
  }
  return o;
}

// 5. Schedule invariants over every acceptance run.
Outcome schedule_invariants() {
  Outcome o;
  o.require(tally.schedule_rounds > 0,
            fmt::format("{} scheduled rounds across {} runs", tally.schedule_rounds, tally.runs));
  o.require(tally.alpha == 0, fmt::format("alpha_t < 1 on every round ({} failures)", tally.alpha));
  o.require(tally.eta_order == 0,
            fmt::format("eta_t strictly decreasing on every consecutive pair ({} failures)", tally.eta_order));
  o.require(tally.delta_identity == 0,
            fmt::format("delta identity within 1e-12 relative (worst {:.3g}, {} failures)",
                        tally.max_delta_error, tally.delta_identity));
  o.require(tally.infeasible == 0, fmt::format("played points inside the set ({} failures)", tally.infeasible));
  return o;
}

// 6. Model invariants over every acceptance run.
Outcome model_invariants() {
  Outcome o;
  o.require(tally.increment == 0,
            fmt::format("|dQ| <= 2NM + R on all {} steps (worst ratio {:.4f})", tally.steps,
                        tally.worst_increment_ratio));
  o.require(tally.telescoping == 0,
            fmt::format("sum drift = |Q(T+1)|^2 / 2 to 1e-9 relative ({} failures)", tally.telescoping));
  o.require(tally.destination == 0,
            fmt::format("destination queues identically 0 ({} failures)", tally.destination));
  o.require(tally.announcement == 0,
            fmt::format("fed losses within announced bounds ({} failures)", tally.announcement));
  return o;
}

// 7. Sequence lemmas and self-bounding bounds.
Outcome lemmas() {
  Outcome o;
  Rng rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(1, 400);
  std::map<std::string, std::size_t> evaluated, violated;
  auto record = [&](const LemmaReport& r, const std::string& only) {
    for (const LemmaCheck& c : r.checks) {
      if (!c.applicable || (!only.empty() && c.name != only)) continue;
      ++evaluated[c.name];
      if (!c.holds) ++violated[c.name];
    }
  };
  for (int i = 0; i < 1000; ++i) {
    // Admissible walk: starts at 0, reflected at 0, steps scaled into [-1, 1].
    const double scale = u(rng);
    std::vector<double> walk{0.0};
    const std::size_t n = len(rng);
    for (std::size_t t = 1; t < n; ++t) walk.push_back(std::abs(walk.back() + scale * (2.0 * u(rng) - 1.0)));
    record(lemma_oracles(walk), "");
    // Arbitrary nonnegative sequence for the summation lemma, heavy-tailed.
    std::vector<double> any(len(rng));
    for (double& x : any) x = u(rng) < 0.2 ? 0.0 : std::pow(u(rng), -1.5);
    record(lemma_oracles(any), "three_quarter_sum");
  }
  for (const char* name : {"three_quarter_sum", "square_upper", "four_thirds_upper", "four_thirds_lower"}) {
    o.require(evaluated[name] >= 1000 && violated[name] == 0,
              fmt::format("{}: {} sequences, {} violations", name, evaluated[name], violated[name]));
  }
  std::uniform_real_distribution<double> param(1.0, 1000.0);
  for (auto kind : {SelfBoundingKind::kThreeQuarterLog, SelfBoundingKind::kThreeQuarterAndSevenEighth}) {
    std::size_t bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double f = param(rng), g = param(rng), h = param(rng);
      const double bound = self_bounding_bound(kind, f, g, h);
      const double root = self_bounding_largest_root(kind, f, g, h);
      if (root > bound * (1.0 + 1e-12)) ++bad;
      worst = std::max(worst, root / bound);
    }
    o.require(bad == 0, fmt::format("{}: bound dominates the bracketed root in {}/100 draws (worst root/bound {:.4g})",
                                    to_string(kind), 100 - bad, worst));
  }
  return o;
}

// 8. Trace round trip and run determinism.
Outcome determinism() {
  Outcome o;
  for (const char* file : {"stability_line.json", "utility_line.json"}) {
    const Scenario s = with_override(load_scenario(kScenarioDir + "/" + file), "rounds=5000");
    const GeneratedTrace g = generate_scenario_trace(s);
    const std::string first = serialize_trace(g.trace, g.reference);
    const GeneratedTrace back = parse_trace(first);
    o.require(serialize_trace(back.trace, back.reference) == first,
              fmt::format("{}: serialize/parse/serialize byte-identical ({} bytes)", file, first.size()));
    auto csv = [&](const GeneratedTrace& trace) {
      const RunResult r = run_scenario(s, trace);
      tally.add(s, r.summary);
      std::ostringstream out;
      write_round_csv(out, r.records);
      return out.str();
    };
    const std::string a = csv(g);
    o.require(a == csv(generate_scenario_trace(s)), fmt::format("{}: identical runs give identical CSV bytes", file));
    o.require(a == csv(back), fmt::format("{}: the reloaded trace reproduces the CSV", file));
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  // Criteria 5 and 6 audit the runs made by the others, so they go last.
  const std::vector<std::pair<int, Criterion>> order{
      {1, {"stability", stability}},
      {2, {"utility trade-off", tradeoff}},
      {3, {"AdaPFOL dynamic regret", olo_regret}},
      {4, {"AdaBGD sanity", bandit}},
      {7, {"sequence lemmas", lemmas}},
      {8, {"round trip and determinism", determinism}},
      {5, {"schedule invariants", schedule_invariants}},
      {6, {"model invariants", model_invariants}}};
  std::map<int, std::pair<std::string, Outcome>> results;
  for (const auto& [id, c] : order) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out = c.fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d (%s) %.1fs\n", id, c.name, secs);
    for (const std::string& n : out.notes) std::printf("%s\n", n.c_str());
    std::fflush(stdout);
    results[id] = {c.name, std::move(out)};
  }
  std::printf("\n");
  bool all = true;
  for (const auto& [id, r] : results) {
    std::printf("%s %d %s\n", r.second.pass ? "PASS" : "FAIL", id, r.first.c_str());
    all = all && r.second.pass;
  }
  return all ? 0 : 1;
}
