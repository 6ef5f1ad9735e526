#include "advnet/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "advnet/error.hpp"

namespace advnet {

namespace {

constexpr double kBudgetRelTol = 1e-12;

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StructuralError("path elements have different dimensions");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

template <class Seq>
std::vector<double> running_lengths(const Seq& seq) {
  std::vector<double> out(seq.size(), 0.0);
  for (std::size_t t = 1; t < seq.size(); ++t) {
    out[t] = out[t - 1] + l1_distance(seq[t - 1].values(), seq[t].values());
  }
  return out;
}

// Per-coordinate bounds of the arrival set.
struct CoordinateRange {
  std::vector<double> lo;
  std::vector<double> hi;
};

CoordinateRange coordinate_range(const BallSandwichedSet& set) {
  CoordinateRange r;
  for (double c : set.center()) {
    r.lo.push_back(c - set.inner_radius());
    r.hi.push_back(c + set.inner_radius());
  }
  return r;
}

double weight_factor(double amplitude, std::size_t period, std::size_t t, std::size_t f,
                     std::size_t dim) {
  const double phase = 2.0 * std::numbers::pi *
                       (static_cast<double>(t) / static_cast<double>(period) +
                        static_cast<double>(f) / static_cast<double>(dim));
  return 1.0 + amplitude * std::sin(phase);
}

// Next hop of every server toward every commodity along BFS shortest paths.
// hop[n][k] is a link index; unused on the diagonal.
std::vector<std::vector<std::size_t>> routing_trees(const Topology& topo) {
  const std::size_t n_servers = topo.servers();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> hop(n_servers, std::vector<std::size_t>(n_servers, kNone));
  for (std::size_t k = 0; k < n_servers; ++k) {
    std::vector<bool> seen(n_servers, false);
    seen[k] = true;
    std::deque<std::size_t> frontier{k};
    while (!frontier.empty()) {
      const std::size_t m = frontier.front();
      frontier.pop_front();
      for (std::size_t l : topo.incoming(m)) {
        const std::size_t n = topo.link(l).from;
        if (seen[n]) continue;
        seen[n] = true;
        hop[n][k] = l;
        frontier.push_back(n);
      }
    }
    for (std::size_t n = 0; n < n_servers; ++n) {
      if (!seen[n]) {
        throw ConstructionError(
            fmt::format("server {} has no route to commodity {}; no reference exists", n, k));
      }
    }
  }
  return hop;
}

// Tree flows f[n][k] = lambda-part + eps * count-part, accumulated over subtrees.
struct TreeLoads {
  std::vector<double> arrival;  // per link: sum of lambda-parts routed over it
  std::vector<double> count;    // per link: sum of count-parts routed over it
  ArrivalMatrix arrival_flow;   // per (n, k)
  ArrivalMatrix count_flow;
};

TreeLoads tree_loads(const Topology& topo, const std::vector<std::vector<std::size_t>>& hop,
                     const ArrivalMatrix& lam) {
  const std::size_t n_servers = topo.servers();
  TreeLoads out{std::vector<double>(topo.link_count(), 0.0),
                std::vector<double>(topo.link_count(), 0.0), ArrivalMatrix(n_servers, n_servers),
                ArrivalMatrix(n_servers, n_servers)};
  for (std::size_t k = 0; k < n_servers; ++k) {
    // Depth of each server in the tree toward k, then accumulate leaves first.
    std::vector<std::size_t> depth(n_servers, 0);
    std::vector<std::size_t> order;
    for (std::size_t n = 0; n < n_servers; ++n) {
      if (n == k) continue;
      std::size_t d = 0;
      for (std::size_t v = n; v != k; v = topo.link(hop[v][k]).to) ++d;
      depth[n] = d;
      order.push_back(n);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });
    for (std::size_t n = 0; n < n_servers; ++n) {
      if (n == k) continue;
      out.arrival_flow(n, k) = lam(n, k);
      out.count_flow(n, k) = 1.0;
    }
    for (std::size_t n : order) {
      const std::size_t l = hop[n][k];
      const std::size_t parent = topo.link(l).to;
      out.arrival[l] += out.arrival_flow(n, k);
      out.count[l] += out.count_flow(n, k);
      if (parent != k) {
        out.arrival_flow(parent, k) += out.arrival_flow(n, k);
        out.count_flow(parent, k) += out.count_flow(n, k);
      }
    }
  }
  return out;
}

std::vector<double> mean_capacity(const AdversaryTrace& trace, const Window& w) {
  std::vector<double> c(trace.topology.link_count(), 0.0);
  for (std::size_t t = w.start; t < w.start + w.length; ++t) {
    for (std::size_t l = 0; l < c.size(); ++l) c[l] += trace.capacities[t][l];
  }
  for (double& v : c) v /= static_cast<double>(w.length);
  return c;
}

ArrivalMatrix mean_arrivals(const std::vector<ArrivalMatrix>& arrivals, const Window& w,
                            std::size_t servers) {
  ArrivalMatrix m(servers, servers);
  for (std::size_t t = w.start; t < w.start + w.length; ++t) {
    for (std::size_t i = 0; i < servers * servers; ++i) m.values()[i] += arrivals[t].values()[i];
  }
  for (double& v : m.values()) v /= static_cast<double>(w.length);
  return m;
}

// Largest eps the tree allocation supports in this window.
double window_slack(const TreeLoads& loads, std::span<const double> cbar) {
  double eps = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < cbar.size(); ++l) {
    if (loads.count[l] > 0.0) eps = std::min(eps, (cbar[l] - loads.arrival[l]) / loads.count[l]);
  }
  return eps;
}

LinkAllocationPlan window_plan(const Topology& topo,
                               const std::vector<std::vector<std::size_t>>& hop,
                               const TreeLoads& loads, std::span<const double> cbar, double eps) {
  const std::size_t n_servers = topo.servers();
  LinkAllocationPlan plan(topo.link_count(), n_servers);
  for (std::size_t l = 0; l < topo.link_count(); ++l) {
    const Link& link = topo.link(l);
    double total = 0.0;
    if (cbar[l] > 0.0) {
      for (std::size_t k = 0; k < n_servers; ++k) {
        if (k == link.from || hop[link.from][k] != l) continue;
        const double share =
            std::max(0.0, loads.arrival_flow(link.from, k) + eps * loads.count_flow(link.from, k)) /
            cbar[l];
        plan(l, k) = share;
        total += share;
      }
    }
    if (total > 1.0) {
      for (std::size_t k = 0; k < n_servers; ++k) plan(l, k) /= total;
    } else {
      plan(l, link.to) += 1.0 - total;
    }
  }
  return plan;
}

std::vector<Window> phase_windows(std::size_t rounds, std::size_t length) {
  if (length == 0) throw ConstructionError("window length must be >= 1");
  std::vector<Window> w;
  for (std::size_t t = 0; t < rounds; t += length) w.push_back({t, std::min(length, rounds - t)});
  return w;
}

void validate_flows(const Topology& topo, std::span<const Flow> flows) {
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const Flow& f = flows[i];
    if (f.source >= topo.servers() || f.destination >= topo.servers()) {
      throw ConstructionError(fmt::format("flow {} references a server out of range", i));
    }
    if (f.source == f.destination) {
      throw ConstructionError(fmt::format("flow {} starts at its own destination", i));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (flows[j] == f) throw ConstructionError(fmt::format("flow {} duplicates flow {}", i, j));
    }
  }
}

std::vector<CapacityMatrix> generate_capacities(const Topology& topo, const AdversaryParams& p,
                                                std::size_t rounds, Rng& rng,
                                                std::vector<Window>& windows) {
  const std::size_t links = topo.link_count();
  const double cap = topo.capacity_bound();
  std::vector<CapacityMatrix> out;
  out.reserve(rounds);
  switch (p.family) {
    case CapacityFamily::kPiecewise: {
      if (p.phase_min == 0 || p.phase_max < p.phase_min) {
        throw ConstructionError("piecewise family needs 1 <= phase_min <= phase_max");
      }
      if (!(p.capacity_lo >= 0.0 && p.capacity_lo <= p.capacity_hi && p.capacity_hi <= cap)) {
        throw ConstructionError("piecewise family needs 0 <= capacity_lo <= capacity_hi <= M");
      }
      std::uniform_int_distribution<std::size_t> length(p.phase_min, p.phase_max);
      std::uniform_real_distribution<double> level(p.capacity_lo, p.capacity_hi);
      for (std::size_t t = 0; t < rounds;) {
        const std::size_t len = std::min(length(rng), rounds - t);
        CapacityMatrix c(links);
        for (std::size_t l = 0; l < links; ++l) c[l] = level(rng);
        for (std::size_t s = 0; s < len; ++s) out.push_back(c);
        windows.push_back({t, len});
        t += len;
      }
      break;
    }
    case CapacityFamily::kDrift: {
      if (p.drift_period == 0) throw ConstructionError("drift family needs period >= 1");
      for (std::size_t t = 0; t < rounds; ++t) {
        CapacityMatrix c(links);
        for (std::size_t l = 0; l < links; ++l) {
          const double phase =
              2.0 * std::numbers::pi *
              (static_cast<double>(t) / static_cast<double>(p.drift_period) +
               static_cast<double>(l) / static_cast<double>(links));
          c[l] = std::clamp(p.drift_base + p.drift_amplitude * std::sin(phase), 0.0, cap);
        }
        out.push_back(std::move(c));
      }
      windows = phase_windows(rounds, p.window_length);
      break;
    }
    case CapacityFamily::kJamming: {
      if (!(p.jam_base >= 0.0 && p.jam_base <= cap)) {
        throw ConstructionError("jamming family needs 0 <= jam_base <= M");
      }
      if (!(p.jam_probability >= 0.0 && p.jam_probability <= 1.0)) {
        throw ConstructionError("jamming probability must lie in [0, 1]");
      }
      std::bernoulli_distribution burst(p.jam_probability);
      std::uniform_int_distribution<std::size_t> victim(0, links == 0 ? 0 : links - 1);
      std::vector<std::size_t> remaining(links, 0);
      for (std::size_t t = 0; t < rounds; ++t) {
        if (links > 0 && burst(rng)) remaining[victim(rng)] = p.jam_length;
        CapacityMatrix c(links, p.jam_base);
        for (std::size_t l = 0; l < links; ++l) {
          if (remaining[l] > 0) {
            c[l] = 0.0;
            --remaining[l];
          }
        }
        out.push_back(std::move(c));
      }
      windows = phase_windows(rounds, p.window_length);
      break;
    }
  }
  return out;
}

BallSandwichedSet make_arrival_set(const Topology& topo, const AdversaryParams& p,
                                   std::size_t dim) {
  BallSandwichedSet set = p.arrival_geometry == SetGeometry::kBox
                              ? BallSandwichedSet::box(dim, p.arrival_lo, p.arrival_hi)
                              : BallSandwichedSet::ball(p.arrival_center, p.arrival_radius);
  if (set.dim() != dim) {
    throw ConstructionError(
        fmt::format("arrival set has dimension {} but there are {} flows", set.dim(), dim));
  }
  const CoordinateRange range = coordinate_range(set);
  for (std::size_t f = 0; f < dim; ++f) {
    if (range.lo[f] < 0.0 || range.hi[f] > topo.arrival_bound()) {
      throw ConstructionError(
          fmt::format("arrival set leaves [0, R] in coordinate {}", f));
    }
  }
  return set;
}

}  // namespace

TraceMode parse_trace_mode(std::string_view name) {
  if (name == "stability") return TraceMode::kStability;
  if (name == "utility") return TraceMode::kUtility;
  throw ParseError(fmt::format("unknown mode '{}'", name));
}

std::string_view to_string(TraceMode mode) {
  return mode == TraceMode::kStability ? "stability" : "utility";
}

CapacityFamily parse_capacity_family(std::string_view name) {
  if (name == "piecewise") return CapacityFamily::kPiecewise;
  if (name == "drift") return CapacityFamily::kDrift;
  if (name == "jamming") return CapacityFamily::kJamming;
  throw ParseError(fmt::format("unknown capacity family '{}'", name));
}

std::string_view to_string(CapacityFamily family) {
  switch (family) {
    case CapacityFamily::kPiecewise: return "piecewise";
    case CapacityFamily::kDrift: return "drift";
    case CapacityFamily::kJamming: return "jamming";
  }
  return "?";
}

UtilityFamily parse_utility_family(std::string_view name) {
  if (name == "log") return UtilityFamily::kLog;
  if (name == "linear_quadratic") return UtilityFamily::kLinearQuadratic;
  throw ParseError(fmt::format("unknown utility family '{}'", name));
}

std::string_view to_string(UtilityFamily family) {
  return family == UtilityFamily::kLog ? "log" : "linear_quadratic";
}

std::vector<double> flow_vector(const ArrivalMatrix& lam, std::span<const Flow> flows) {
  std::vector<double> out;
  out.reserve(flows.size());
  for (const Flow& f : flows) out.push_back(lam(f.source, f.destination));
  return out;
}

ArrivalMatrix arrival_matrix(std::span<const double> rates, std::span<const Flow> flows,
                             std::size_t servers) {
  if (rates.size() != flows.size()) throw StructuralError("rate vector does not match the flows");
  ArrivalMatrix m(servers, servers);
  for (std::size_t i = 0; i < flows.size(); ++i) m(flows[i].source, flows[i].destination) = rates[i];
  return m;
}

UtilitySpec::UtilitySpec(UtilityFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
  if (family_ == UtilityFamily::kLinearQuadratic && params_.size() % 2 != 0) {
    throw StructuralError("linear-quadratic utility needs an even parameter count");
  }
}

std::size_t UtilitySpec::dim() const {
  return family_ == UtilityFamily::kLog ? params_.size() : params_.size() / 2;
}

double UtilitySpec::evaluate(std::span<const double> x) const {
  const std::size_t d = dim();
  if (x.size() != d) throw StructuralError("utility argument has the wrong dimension");
  double g = 0.0;
  if (family_ == UtilityFamily::kLog) {
    for (std::size_t f = 0; f < d; ++f) g += params_[f] * std::log1p(x[f]);
  } else {
    for (std::size_t f = 0; f < d; ++f) g += params_[f] * x[f] - 0.5 * params_[d + f] * x[f] * x[f];
  }
  return g;
}

std::vector<double> UtilitySpec::gradient(std::span<const double> x) const {
  const std::size_t d = dim();
  if (x.size() != d) throw StructuralError("utility argument has the wrong dimension");
  std::vector<double> out(d);
  for (std::size_t f = 0; f < d; ++f) {
    out[f] = family_ == UtilityFamily::kLog ? params_[f] / (1.0 + x[f])
                                            : params_[f] - params_[d + f] * x[f];
  }
  return out;
}

std::vector<double> sample_in_set(const BallSandwichedSet& set, Rng& rng) {
  const std::size_t d = set.dim();
  std::vector<double> centered(d);
  if (set.geometry() == SetGeometry::kBox) {
    std::uniform_real_distribution<double> u(-set.inner_radius(), set.inner_radius());
    for (double& v : centered) v = u(rng);
  } else {
    centered = sample_unit_sphere(d, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double radius = set.inner_radius() * std::pow(u(rng), 1.0 / static_cast<double>(d));
    for (double& v : centered) v *= radius;
  }
  return set.to_original(centered);
}

std::size_t count_utility_violations(const UtilitySpec& g, const BallSandwichedSet& set,
                                     double bound, double lipschitz, std::size_t pairs, Rng& rng) {
  constexpr double kSlack = 1e-9;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::vector<double> x = sample_in_set(set, rng);
    const std::vector<double> y = sample_in_set(set, rng);
    std::vector<double> mid(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) mid[j] = 0.5 * (x[j] + y[j]);
    const double gx = g.evaluate(x);
    const double gy = g.evaluate(y);
    if (g.evaluate(mid) < 0.5 * (gx + gy) - kSlack) ++violations;
    if (std::abs(gx) > bound + kSlack) ++violations;
    if (std::abs(gx - gy) > lipschitz * l2_distance(x, y) + kSlack) ++violations;
  }
  return violations;
}

GeneratedTrace generate_trace(const Topology& topo, const AdversaryParams& params, TraceMode mode,
                              std::size_t rounds, std::uint64_t seed) {
  if (rounds == 0) throw ConstructionError("trace needs at least one round");
  validate_flows(topo, params.flows);
  Rng rng(seed);

  GeneratedTrace out;
  AdversaryTrace& trace = out.trace;
  trace.topology = topo;
  trace.mode = mode;
  trace.flows = params.flows;
  std::vector<Window> windows;
  trace.capacities = generate_capacities(topo, params, rounds, rng, windows);

  const std::size_t n_servers = topo.servers();
  const std::size_t dim = params.flows.size();
  if (mode == TraceMode::kStability) {
    if (params.flow_rates.size() != dim) {
      throw ConstructionError(fmt::format("{} flows but {} flow rates", dim, params.flow_rates.size()));
    }
    for (std::size_t f = 0; f < dim; ++f) {
      if (params.flow_rates[f] < 0.0 || params.flow_rates[f] > topo.arrival_bound()) {
        throw ConstructionError(fmt::format("flow rate {} lies outside [0, R]", f));
      }
    }
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    trace.arrivals.reserve(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
      ArrivalMatrix lam(n_servers, n_servers);
      for (std::size_t f = 0; f < dim; ++f) {
        const double noise = params.arrival_jitter > 0.0 ? params.arrival_jitter * jitter(rng) : 0.0;
        lam(params.flows[f].source, params.flows[f].destination) =
            std::clamp(params.flow_rates[f] + noise, 0.0, topo.arrival_bound());
      }
      trace.arrivals.push_back(std::move(lam));
    }
  } else {
    if (dim == 0) throw ConstructionError("utility mode needs at least one flow");
    const BallSandwichedSet set = make_arrival_set(topo, params, dim);
    const CoordinateRange range = coordinate_range(set);
    if (params.utility_weights.size() != dim) {
      throw ConstructionError(
          fmt::format("{} flows but {} utility weights", dim, params.utility_weights.size()));
    }
    if (!(params.utility_amplitude >= 0.0 && params.utility_amplitude < 1.0)) {
      throw ConstructionError("utility amplitude must lie in [0, 1)");
    }
    if (params.utility_period == 0) throw ConstructionError("utility period must be >= 1");
    const bool quadratic = params.utility_family == UtilityFamily::kLinearQuadratic;
    if (quadratic && params.utility_curvature.size() != dim) {
      throw ConstructionError("linear-quadratic utility needs one curvature per flow");
    }
    const double amp = params.utility_amplitude;
    double bound = 0.0;
    double lip_sq = 0.0;
    for (std::size_t f = 0; f < dim; ++f) {
      const double w = params.utility_weights[f];
      if (w < 0.0) throw ConstructionError(fmt::format("utility weight {} is negative", f));
      const double w_hi = w * (1.0 + amp);
      const double w_lo = w * (1.0 - amp);
      if (!quadratic) {
        bound += w_hi * std::log1p(range.hi[f]);
        lip_sq += std::pow(w_hi / (1.0 + range.lo[f]), 2);
      } else {
        const double b = params.utility_curvature[f];
        if (b < 0.0) throw ConstructionError(fmt::format("utility curvature {} is negative", f));
        bound += w_hi * range.hi[f] + 0.5 * b * range.hi[f] * range.hi[f];
        const double slope = std::max(std::abs(w_hi - b * range.lo[f]), std::abs(w_lo - b * range.hi[f]));
        lip_sq += slope * slope;
      }
    }
    trace.utility_family = params.utility_family;
    trace.utility_bound = bound;
    trace.lipschitz = std::sqrt(lip_sq);
    trace.arrival_set = set;
    trace.utility_params.reserve(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
      std::vector<double> p(quadratic ? 2 * dim : dim);
      for (std::size_t f = 0; f < dim; ++f) {
        p[f] = params.utility_weights[f] * weight_factor(amp, params.utility_period, t, f, dim);
        if (quadratic) p[dim + f] = params.utility_curvature[f];
      }
      trace.utility_params.push_back(std::move(p));
    }
    Rng check_rng(seed ^ 0x5eedf00dULL);
    for (std::size_t t : {std::size_t{0}, rounds / 2, rounds - 1}) {
      if (count_utility_violations(trace.utility(t), set, trace.utility_bound, trace.lipschitz, 64,
                                   check_rng) > 0) {
        throw ConstructionError(fmt::format("utility of round {} fails its spot check", t));
      }
    }
  }

  out.reference = build_reference(trace, windows, params);
  return out;
}

ReferencePolicy build_reference(const AdversaryTrace& trace, std::span<const Window> windows,
                                const AdversaryParams& params) {
  const Topology& topo = trace.topology;
  const std::size_t n_servers = topo.servers();
  const std::size_t rounds = trace.rounds();
  const auto hop = routing_trees(topo);

  ReferencePolicy ref;
  ref.windows.assign(windows.begin(), windows.end());
  ref.allocations.reserve(rounds);

  std::vector<std::vector<double>> cbars;
  for (const Window& w : windows) cbars.push_back(mean_capacity(trace, w));

  // Per-window arrival means. Utility mode settles a constant lambda first.
  std::vector<ArrivalMatrix> lambdas;
  if (trace.mode == TraceMode::kStability) {
    for (const Window& w : windows) lambdas.push_back(mean_arrivals(trace.arrivals, w, n_servers));
  } else {
    const BallSandwichedSet& set = trace.arrival_set.value();
    const double spread = set.geometry() == SetGeometry::kBox
                              ? set.inner_radius()
                              : set.inner_radius() / std::sqrt(static_cast<double>(set.dim()));
    std::vector<double> low = set.center();
    std::vector<double> high = set.center();
    for (std::size_t f = 0; f < low.size(); ++f) {
      low[f] -= spread;
      high[f] += spread;
    }
    const TreeLoads at_low = tree_loads(topo, hop, arrival_matrix(low, trace.flows, n_servers));
    const TreeLoads at_high = tree_loads(topo, hop, arrival_matrix(high, trace.flows, n_servers));
    double scale = 1.0;
    for (std::size_t j = 0; j < windows.size(); ++j) {
      for (std::size_t l = 0; l < topo.link_count(); ++l) {
        if (at_low.count[l] == 0.0) continue;
        const double room = cbars[j][l] - at_low.arrival[l] - params.min_slack * at_low.count[l];
        if (room < 0.0) {
          throw ConstructionError(fmt::format(
              "window {} (rounds {}..{}) cannot carry slack {} even at the smallest arrivals", j,
              windows[j].start, windows[j].start + windows[j].length - 1, params.min_slack));
        }
        const double rise = at_high.arrival[l] - at_low.arrival[l];
        if (rise > 0.0) scale = std::min(scale, room / rise);
      }
    }
    std::vector<double> chosen(low.size());
    for (std::size_t f = 0; f < low.size(); ++f) chosen[f] = low[f] + scale * (high[f] - low[f]);
    const ArrivalMatrix lam = arrival_matrix(chosen, trace.flows, n_servers);
    lambdas.assign(windows.size(), lam);
    ref.arrivals.assign(rounds, lam);
  }

  double slack = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t j = 0; j < windows.size(); ++j) {
    const TreeLoads loads = tree_loads(topo, hop, lambdas[j]);
    const double eps = std::min(window_slack(loads, cbars[j]), topo.capacity_bound());
    if (eps < slack) {
      slack = eps;
      worst = j;
    }
    const LinkAllocationPlan plan = window_plan(topo, hop, loads, cbars[j], std::max(eps, 0.0));
    for (std::size_t s = 0; s < windows[j].length; ++s) ref.allocations.push_back(plan);
  }
  if (slack < -kFeasibilityTol || slack < params.min_slack - kFeasibilityTol) {
    const Window& w = windows[worst];
    throw ConstructionError(fmt::format(
        "window {} (rounds {}..{}) supports slack {} which is below the required {}", worst,
        w.start, w.start + w.length - 1, slack, std::max(params.min_slack, 0.0)));
  }
  if (ref.allocations.size() != rounds) {
    throw ConstructionError("windows do not cover the horizon");
  }
  ref.slack = slack;
  ref.window_constant = window_constant(windows, rounds);
  ref.allocation_budget = {
      tightest_path_constant(running_path_lengths(ref.allocations), params.allocation_exponent),
      params.allocation_exponent};
  ref.arrival_budget = {0.0, params.arrival_exponent};
  if (trace.mode == TraceMode::kUtility) {
    ref.arrival_budget.constant =
        tightest_path_constant(running_path_lengths(ref.arrivals), params.arrival_exponent);
  }
  return ref;
}

StabilityVerdict verify_piecewise_stability(const AdversaryTrace& trace, const ReferencePolicy& ref,
                                            const Topology& topo) {
  const std::size_t rounds = trace.rounds();
  const bool utility = trace.mode == TraceMode::kUtility;
  if (ref.allocations.size() != rounds) throw StructuralError("reference length differs from trace");
  if (utility ? ref.arrivals.size() != rounds : trace.arrivals.size() != rounds) {
    throw StructuralError("arrival sequence length differs from trace");
  }
  const std::size_t n_servers = topo.servers();
  for (std::size_t j = 0; j < ref.windows.size(); ++j) {
    const Window& w = ref.windows[j];
    if (w.length == 0 || w.start + w.length > rounds) {
      throw StructuralError(fmt::format("window {} lies outside the horizon", j));
    }
    QueueMatrix net(n_servers, n_servers);  // out - in - arrivals, summed over the window
    for (std::size_t t = w.start; t < w.start + w.length; ++t) {
      const LinkAllocationPlan& a = ref.allocations[t];
      for (std::size_t l = 0; l < topo.link_count(); ++l) {
        const Link& link = topo.link(l);
        const double c = trace.capacities[t][l];
        for (std::size_t k = 0; k < n_servers; ++k) {
          net(link.from, k) += c * a(l, k);
          net(link.to, k) -= c * a(l, k);
        }
      }
      const ArrivalMatrix& lam = utility ? ref.arrivals[t] : trace.arrivals[t];
      for (std::size_t i = 0; i < n_servers * n_servers; ++i) net.values()[i] -= lam.values()[i];
    }
    for (std::size_t n = 0; n < n_servers; ++n) {
      for (std::size_t k = 0; k < n_servers; ++k) {
        if (n == k) continue;
        const double margin = net(n, k) / static_cast<double>(w.length);
        if (margin < ref.slack - kFeasibilityTol) {
          return {false, 0.0, j, n, k, ref.slack - margin};
        }
      }
    }
  }
  return {true, ref.slack, 0, 0, 0, 0.0};
}

std::vector<std::string> check_reference_invariants(const AdversaryTrace& trace,
                                                    const ReferencePolicy& ref) {
  std::vector<std::string> problems;
  const std::size_t rounds = trace.rounds();
  std::size_t next = 0;
  for (std::size_t j = 0; j < ref.windows.size(); ++j) {
    if (ref.windows[j].start != next || ref.windows[j].length == 0) {
      problems.push_back(fmt::format("window {} does not continue the partition", j));
    }
    next = ref.windows[j].start + ref.windows[j].length;
  }
  if (next != rounds) problems.push_back("windows do not cover the horizon");
  if (ref.slack < 0.0) problems.push_back("negative slack");
  double spread = 0.0;
  for (const Window& w : ref.windows) spread += std::pow(static_cast<double>(w.length) - 1.0, 2);
  if (spread > ref.window_constant * static_cast<double>(rounds) * (1.0 + kBudgetRelTol)) {
    problems.push_back(fmt::format("window spread {} exceeds C_W T = {}", spread,
                                   ref.window_constant * static_cast<double>(rounds)));
  }
  if (ref.allocations.size() != rounds) {
    problems.push_back("allocation sequence length differs from trace");
    return problems;
  }
  for (std::size_t t = 0; t < rounds; ++t) {
    try {
      check_plan(ref.allocations[t], trace.topology);
    } catch (const std::exception& e) {
      problems.push_back(fmt::format("round {} allocation: {}", t, e.what()));
      break;
    }
  }
  auto check_budget = [&](std::span<const double> running, const PathBudget& b, const char* what) {
    for (std::size_t t = 0; t < running.size(); ++t) {
      const double cap = b.constant * std::pow(static_cast<double>(t + 1), 0.5 - b.exponent);
      if (running[t] > cap * (1.0 + kBudgetRelTol)) {
        problems.push_back(fmt::format("{} path length {} exceeds budget {} at round {}", what,
                                       running[t], cap, t));
        return;
      }
    }
  };
  check_budget(running_path_lengths(ref.allocations), ref.allocation_budget, "allocation");
  if (trace.mode == TraceMode::kUtility) {
    if (ref.arrivals.size() != rounds) {
      problems.push_back("reference arrival length differs from trace");
    } else {
      check_budget(running_path_lengths(ref.arrivals), ref.arrival_budget, "arrival");
      const BallSandwichedSet& set = trace.arrival_set.value();
      for (std::size_t t = 0; t < rounds; ++t) {
        if (!set.contains_centered(set.to_centered(flow_vector(ref.arrivals[t], trace.flows)))) {
          problems.push_back(fmt::format("round {} reference arrivals leave the arrival set", t));
          break;
        }
      }
    }
  }
  return problems;
}

double path_length(std::span<const std::vector<double>> seq) {
  if (seq.empty()) throw ContractViolation("path length of an empty sequence");
  double total = 0.0;
  for (std::size_t t = 1; t < seq.size(); ++t) total += l1_distance(seq[t - 1], seq[t]);
  return total;
}

std::vector<double> running_path_lengths(std::span<const LinkAllocationPlan> plans) {
  return running_lengths(plans);
}

std::vector<double> running_path_lengths(std::span<const ArrivalMatrix> arrivals) {
  return running_lengths(arrivals);
}

double tightest_path_constant(std::span<const double> running, double exponent) {
  double c = 0.0;
  for (std::size_t t = 0; t < running.size(); ++t) {
    c = std::max(c, running[t] / std::pow(static_cast<double>(t + 1), 0.5 - exponent));
  }
  return c;
}

double window_constant(std::span<const Window> windows, std::size_t rounds) {
  if (rounds == 0) throw ContractViolation("window constant needs T >= 1");
  double spread = 0.0;
  for (const Window& w : windows) spread += std::pow(static_cast<double>(w.length) - 1.0, 2);
  return spread / static_cast<double>(rounds);
}

}  // namespace advnet
