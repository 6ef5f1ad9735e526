#include "advnet/schedulers.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "advnet/error.hpp"

namespace advnet {

namespace {

double differential_linf(const QueueMatrix& q, std::size_t n, std::size_t m) {
  double g = 0.0;
  for (std::size_t k = 0; k < q.cols(); ++k) g = std::max(g, std::abs(q(m, k) - q(n, k)));
  return g;
}

}  // namespace

SchedulerKind parse_scheduler_kind(std::string_view name) {
  if (name == "nso") return SchedulerKind::kNso;
  if (name == "umo2") return SchedulerKind::kUmo2;
  if (name == "oracle_backpressure") return SchedulerKind::kOracleBackpressure;
  if (name == "uniform_random") return SchedulerKind::kUniformRandom;
  if (name == "fixed_plan") return SchedulerKind::kFixedPlan;
  throw ParseError(fmt::format("unknown scheduler '{}'", name));
}

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kNso: return "nso";
    case SchedulerKind::kUmo2: return "umo2";
    case SchedulerKind::kOracleBackpressure: return "oracle_backpressure";
    case SchedulerKind::kUniformRandom: return "uniform_random";
    case SchedulerKind::kFixedPlan: return "fixed_plan";
  }
  return "?";
}

LinkLearners::LinkLearners(const Topology& topo, BaseLearnerKind kind, std::size_t horizon)
    : topo_(topo), announced_(topo.link_count(), 0.0) {
  const BaseLearnerFactory factory = make_base_learner_factory(kind, topo.servers(), horizon);
  learners_.reserve(topo.link_count());
  for (std::size_t l = 0; l < topo.link_count(); ++l) learners_.emplace_back(factory);
}

LinkAllocationPlan LinkLearners::decide(const QueueMatrix& q, RoundTelemetry& telemetry) {
  LinkAllocationPlan plan(topo_.link_count(), topo_.servers());
  telemetry.max_announced = 0.0;
  for (std::size_t l = 0; l < topo_.link_count(); ++l) {
    const Link& link = topo_.link(l);
    const double bound = topo_.capacity_bound() * differential_linf(q, link.from, link.to);
    announced_[l] = bound;
    telemetry.max_announced = std::max(telemetry.max_announced, bound);
    // A zero bound means the coming loss is zero; nothing to announce.
    if (bound > 0.0) learners_[l].announce_bound(bound);
    const std::vector<double> x = learners_[l].act();
    std::copy(x.begin(), x.end(), plan.row(l).begin());
  }
  return plan;
}

void LinkLearners::observe(const QueueMatrix& q, const CapacityMatrix& c,
                           RoundTelemetry& telemetry) {
  std::vector<double> loss(topo_.servers());
  for (std::size_t l = 0; l < topo_.link_count(); ++l) {
    const Link& link = topo_.link(l);
    for (std::size_t k = 0; k < loss.size(); ++k) loss[k] = c[l] * (q(link.to, k) - q(link.from, k));
    if (linf_norm(loss) > announced_[l]) ++telemetry.announcement_violations;
    learners_[l].feed(loss);
  }
}

std::size_t LinkLearners::resets() const {
  std::size_t total = 0;
  for (const AdaPFOL& a : learners_) total += a.resets();
  return total;
}

NsoScheduler::NsoScheduler(const SchedulerContext& ctx, BaseLearnerKind kind)
    : links_(ctx.topology, kind, ctx.horizon) {
  if (ctx.mode != TraceMode::kStability) {
    throw ConstructionError("nso runs in stability mode; use umo2 for utility mode");
  }
}

SchedulerDecision NsoScheduler::decide(const QueueMatrix& q, const PreDecisionInfo& info) {
  if (info.arrivals == nullptr) throw ContractViolation("nso needs the round's arrivals");
  telemetry_ = {};
  return {links_.decide(q, telemetry_), *info.arrivals, {}};
}

void NsoScheduler::observe(const QueueMatrix& q, const Feedback& feedback) {
  links_.observe(q, feedback.capacity, telemetry_);
}

Umo2Scheduler::Umo2Scheduler(const SchedulerContext& ctx, BaseLearnerKind kind,
                             std::uint64_t seed)
    : links_(ctx.topology, kind, ctx.horizon),
      flows_(ctx.flows),
      servers_(ctx.topology.servers()),
      tradeoff_(ctx.constants.tradeoff),
      bgd_(ctx.arrival_set.has_value()
               ? AdaBGD(*ctx.arrival_set, ctx.constants)
               : throw ConstructionError("umo2 needs an arrival set")),
      rng_(seed) {
  if (ctx.mode != TraceMode::kUtility) throw ConstructionError("umo2 runs in utility mode");
  if (ctx.arrival_set->dim() != flows_.size()) {
    throw ConstructionError("arrival set dimension differs from the flow count");
  }
}

SchedulerDecision Umo2Scheduler::decide(const QueueMatrix& q, const PreDecisionInfo&) {
  telemetry_ = {};
  SchedulerDecision d;
  d.plan = links_.decide(q, telemetry_);
  triple_ = bgd_.schedule(q);
  AdaBGD::Play play = bgd_.act(triple_, rng_);
  telemetry_.triple = triple_;
  telemetry_.queue_linf = queue_linf(q);
  telemetry_.queue_l2 = std::sqrt(queue_l2sq(q));
  telemetry_.played_feasible = bgd_.set().contains_centered(play.point);
  direction_ = std::move(play.direction);
  rates_ = bgd_.set().to_original(play.point);
  d.arrivals = arrival_matrix(rates_, flows_, servers_);
  d.flow_rates = rates_;
  return d;
}

void Umo2Scheduler::observe(const QueueMatrix& q, const Feedback& feedback) {
  links_.observe(q, feedback.capacity, telemetry_);
  double backlog = 0.0;
  for (std::size_t f = 0; f < flows_.size(); ++f) {
    backlog += q(flows_[f].source, flows_[f].destination) * rates_[f];
  }
  bgd_.feed(triple_, backlog - tradeoff_ * feedback.utility_value, direction_);
}

BaselineScheduler::BaselineScheduler(const SchedulerContext& ctx, BaselineKind kind,
                                     std::optional<LinkAllocationPlan> fixed_plan,
                                     std::uint64_t seed)
    : topo_(ctx.topology), kind_(kind), fixed_plan_(std::move(fixed_plan)), flows_(ctx.flows), rng_(seed) {
  if (kind_ == BaselineKind::kFixedPlan) {
    if (!fixed_plan_) throw ConstructionError("fixed_plan scheduler needs a plan");
    check_plan(*fixed_plan_, topo_);
  }
  if (ctx.mode == TraceMode::kUtility) {
    if (!ctx.arrival_set) throw ConstructionError("utility mode needs an arrival set");
    center_rates_ = ctx.arrival_set->center();
  }
}

SchedulerDecision BaselineScheduler::decide(const QueueMatrix& q, const PreDecisionInfo& info) {
  telemetry_ = {};
  SchedulerDecision d;
  switch (kind_) {
    case BaselineKind::kOracleBackpressure:
      if (info.capacity == nullptr) throw ContractViolation("oracle baseline needs the capacity");
      d.plan = backpressure_plan(topo_, q, *info.capacity);
      break;
    case BaselineKind::kUniformRandom: {
      d.plan = LinkAllocationPlan(topo_.link_count(), topo_.servers());
      std::exponential_distribution<double> e(1.0);
      for (std::size_t l = 0; l < topo_.link_count(); ++l) {
        double total = 0.0;
        for (double& v : d.plan.row(l)) total += (v = e(rng_));
        for (double& v : d.plan.row(l)) v /= total;
      }
      break;
    }
    case BaselineKind::kFixedPlan:
      d.plan = *fixed_plan_;
      break;
  }
  if (center_rates_) {
    d.flow_rates = *center_rates_;
    d.arrivals = arrival_matrix(*center_rates_, flows_, topo_.servers());
  } else {
    if (info.arrivals == nullptr) throw ContractViolation("stability mode needs the round's arrivals");
    d.arrivals = *info.arrivals;
  }
  return d;
}

LinkAllocationPlan backpressure_plan(const Topology& topo, const QueueMatrix& q,
                                     const CapacityMatrix& c) {
  LinkAllocationPlan plan(topo.link_count(), topo.servers());
  for (std::size_t l = 0; l < topo.link_count(); ++l) {
    const Link& link = topo.link(l);
    std::size_t best = link.from;
    double best_weight = 0.0;
    for (std::size_t k = 0; k < topo.servers(); ++k) {
      const double w = c[l] * std::max(q(link.from, k) - q(link.to, k), 0.0);
      if (w > best_weight) {
        best_weight = w;
        best = k;
      }
    }
    plan(l, best) = 1.0;
  }
  return plan;
}

std::unique_ptr<Scheduler> make_scheduler(const SchedulerConfig& config,
                                          const SchedulerContext& ctx) {
  switch (config.kind) {
    case SchedulerKind::kNso:
      return std::make_unique<NsoScheduler>(ctx, config.base_learner);
    case SchedulerKind::kUmo2:
      return std::make_unique<Umo2Scheduler>(ctx, config.base_learner, config.seed);
    case SchedulerKind::kOracleBackpressure:
      return std::make_unique<BaselineScheduler>(ctx, BaselineKind::kOracleBackpressure,
                                                 std::nullopt, config.seed);
    case SchedulerKind::kUniformRandom:
      return std::make_unique<BaselineScheduler>(ctx, BaselineKind::kUniformRandom, std::nullopt,
                                                 config.seed);
    case SchedulerKind::kFixedPlan:
      return std::make_unique<BaselineScheduler>(ctx, BaselineKind::kFixedPlan, config.fixed_plan,
                                                 config.seed);
  }
  throw ConstructionError("unknown scheduler kind");
}

}  // namespace advnet
