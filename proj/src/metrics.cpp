#include "advnet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "advnet/error.hpp"

namespace advnet {

namespace {

constexpr double kOracleRelTol = 1e-12;

bool is_walk(std::span<const double> x) {
  if (x.empty() || x.front() != 0.0) return false;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (x[t] < 0.0) return false;
    if (t > 0 && std::abs(x[t] - x[t - 1]) > 1.0) return false;
  }
  return true;
}

LemmaCheck make_check(std::string name, bool applicable, double smaller, double larger) {
  LemmaCheck c{std::move(name), applicable, smaller, larger, true};
  if (applicable) c.holds = smaller <= larger * (1.0 + kOracleRelTol);
  return c;
}

// y - (right-hand side of the hypothesis); the hypothesis holds where this is <= 0.
double hypothesis_gap(SelfBoundingKind kind, double y, double f, double g, double h) {
  double rhs = f + std::pow(y, 0.75) * g * std::log(y);
  if (kind == SelfBoundingKind::kThreeQuarterAndSevenEighth) rhs += std::pow(y, 0.875) * h;
  return y - rhs;
}

void require_at_least_one(double v, const char* name) {
  if (!(v >= 1.0)) throw ContractViolation(fmt::format("self-bounding needs {} >= 1, got {}", name, v));
}

}  // namespace

RoundRecord make_round_record(std::size_t t, const QueueMatrix& before, const QueueMatrix& after,
                              double utility, double ref_utility, double tradeoff) {
  RoundRecord r;
  r.t = t;
  r.l1_queue = queue_l1(before);
  r.l2sq_queue = queue_l2sq(before);
  r.lyapunov = 0.5 * r.l2sq_queue;
  r.drift = 0.5 * queue_l2sq(after) - r.lyapunov;
  r.utility = utility;
  r.ref_utility = ref_utility;
  r.dpp = r.drift - tradeoff * utility;
  return r;
}

std::vector<double> drift_series(std::span<const QueueMatrix> queue_log) {
  std::vector<double> out;
  if (queue_log.size() < 2) return out;
  out.reserve(queue_log.size() - 1);
  double prev = 0.5 * queue_l2sq(queue_log[0]);
  for (std::size_t t = 1; t < queue_log.size(); ++t) {
    const double next = 0.5 * queue_l2sq(queue_log[t]);
    out.push_back(next - prev);
    prev = next;
  }
  return out;
}

double olo_regret_round(const Topology& topo, const CapacityMatrix& c, const QueueMatrix& q,
                        const LinkAllocationPlan& plan, const LinkAllocationPlan& ref_plan) {
  double total = 0.0;
  for (std::size_t l = 0; l < topo.link_count(); ++l) {
    const Link& link = topo.link(l);
    if (c[l] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t k = 0; k < topo.servers(); ++k) {
      inner += (q(link.to, k) - q(link.from, k)) * (plan(l, k) - ref_plan(l, k));
    }
    total += c[l] * inner;
  }
  return total;
}

double olo_regret_vs_reference(const AdversaryTrace& trace, std::span<const QueueMatrix> queue_log,
                               std::span<const LinkAllocationPlan> plan_log,
                               const ReferencePolicy& ref) {
  const std::size_t rounds = plan_log.size();
  if (queue_log.size() < rounds || ref.allocations.size() < rounds || trace.rounds() < rounds) {
    throw StructuralError("regret logs have mismatched lengths");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < rounds; ++t) {
    total += olo_regret_round(trace.topology, trace.capacities[t], queue_log[t], plan_log[t],
                              ref.allocations[t]);
  }
  return total;
}

double olo_regret_realized(const AdversaryTrace& trace, std::span<const QueueMatrix> queue_log,
                           std::span<const TransmissionMatrix> mu_log, const ReferencePolicy& ref) {
  const std::size_t rounds = mu_log.size();
  if (queue_log.size() < rounds || ref.allocations.size() < rounds || trace.rounds() < rounds) {
    throw StructuralError("regret logs have mismatched lengths");
  }
  const Topology& topo = trace.topology;
  double total = 0.0;
  for (std::size_t t = 0; t < rounds; ++t) {
    const QueueMatrix& q = queue_log[t];
    for (std::size_t l = 0; l < topo.link_count(); ++l) {
      const Link& link = topo.link(l);
      const double c = trace.capacities[t][l];
      for (std::size_t k = 0; k < topo.servers(); ++k) {
        total += (q(link.to, k) - q(link.from, k)) * (mu_log[t](l, k) - c * ref.allocations[t](l, k));
      }
    }
  }
  return total;
}

bool LemmaReport::all_hold() const {
  return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.holds; });
}

std::size_t LemmaReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const LemmaCheck& c) { return !c.holds; }));
}

LemmaReport lemma_oracles(std::span<const double> seq) {
  const bool nonnegative = std::all_of(seq.begin(), seq.end(), [](double v) { return v >= 0.0; });
  const bool walk = is_walk(seq);

  double running = 0.0;
  double weighted = 0.0;
  double squares = 0.0;
  double four_thirds = 0.0;
  for (double x : seq) {
    running += x;
    if (x > 0.0) weighted += x / std::pow(running, 0.25);
    squares += x * x;
    four_thirds += std::pow(std::max(x, 0.0), 4.0 / 3.0);
  }
  const double last = seq.empty() ? 0.0 : std::max(seq.back(), 0.0);

  LemmaReport report;
  report.checks.push_back(
      make_check("three_quarter_sum", nonnegative, weighted, 2.0 * std::pow(running, 0.75)));
  report.checks.push_back(
      make_check("square_upper", walk, squares, 4.0 * std::pow(running, 1.5)));
  report.checks.push_back(make_check("four_thirds_upper", walk, four_thirds,
                                     std::pow(2.0, 1.0 / 6.0) * std::pow(running, 7.0 / 6.0)));
  report.checks.push_back(make_check("four_thirds_lower", walk,
                                     std::pow(4.0, -7.0 / 3.0) * std::pow(last, 7.0 / 3.0),
                                     four_thirds));
  return report;
}

std::string_view to_string(SelfBoundingKind kind) {
  return kind == SelfBoundingKind::kThreeQuarterLog ? "three_quarter_log"
                                                    : "three_quarter_and_seven_eighth";
}

double self_bounding_bound(SelfBoundingKind kind, double f, double g, double h) {
  require_at_least_one(f, "f");
  require_at_least_one(g, "g");
  if (kind == SelfBoundingKind::kThreeQuarterLog) {
    const double base = std::pow(f, 0.25) + g;
    return std::pow(std::pow(f, 0.25) + g * std::log(2.0 * base * base), 4.0);
  }
  require_at_least_one(h, "h");
  const double base = std::pow(f, 0.125) + std::sqrt(g) + h;
  return std::pow(std::pow(f, 0.125) + std::sqrt(g) * std::log(2.0 * base * base) + h, 8.0);
}

double self_bounding_largest_root(SelfBoundingKind kind, double f, double g, double h) {
  require_at_least_one(f, "f");
  require_at_least_one(g, "g");
  if (kind == SelfBoundingKind::kThreeQuarterAndSevenEighth) require_at_least_one(h, "h");
  constexpr double kRatio = 1.01;
  constexpr double kCeiling = 1e80;
  // y = 1 always satisfies the hypothesis since f >= 1; find the last grid
  // point that does, then bisect toward the crossing above it.
  double inside = 1.0;
  for (double y = 1.0; y <= kCeiling; y *= kRatio) {
    if (hypothesis_gap(kind, y, f, g, h) <= 0.0) inside = y;
  }
  double lo = inside;
  double hi = inside * kRatio;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (hypothesis_gap(kind, mid, f, g, h) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

std::string format_decimal(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? "0" : fmt::format("{}", v);
  const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(v))));
  const int decimals = std::max(0, 11 - magnitude);
  std::string s = fmt::format("{:.{}f}", v, decimals);
  return s;
}

std::string round_csv_row(const RoundRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{}", r.t, format_decimal(r.l1_queue),
                     format_decimal(r.l2sq_queue), format_decimal(r.lyapunov),
                     format_decimal(r.drift), format_decimal(r.utility),
                     format_decimal(r.ref_utility), format_decimal(r.dpp));
}

void write_round_csv(std::ostream& out, std::span<const RoundRecord> records) {
  out << kRoundCsvHeader << '\n';
  for (const RoundRecord& r : records) out << round_csv_row(r) << '\n';
}

}  // namespace advnet
