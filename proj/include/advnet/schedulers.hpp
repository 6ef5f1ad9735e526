#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "advnet/adversary.hpp"
#include "advnet/bco.hpp"
#include "advnet/net_model.hpp"
#include "advnet/olo.hpp"

namespace advnet {

enum class SchedulerKind { kNso, kUmo2, kOracleBackpressure, kUniformRandom, kFixedPlan };

SchedulerKind parse_scheduler_kind(std::string_view name);
std::string_view to_string(SchedulerKind kind);

// What a scheduler may see before deciding. Stability mode reveals the
// round's adversarial arrivals; capacity is handed only to privileged baselines.
struct PreDecisionInfo {
  const ArrivalMatrix* arrivals = nullptr;
  const CapacityMatrix* capacity = nullptr;
};

struct SchedulerDecision {
  LinkAllocationPlan plan;
  ArrivalMatrix arrivals;
  std::vector<double> flow_rates;  // utility mode: the chosen point of the arrival set
};

// Post-decision feedback only: realized capacities and transmissions, and the
// scalar utility of the chosen arrivals.
struct Feedback {
  const CapacityMatrix& capacity;
  const TransmissionMatrix& transmissions;
  double utility_value = 0.0;
};

// Learner-side facts about the last round, for runtime invariant checks.
struct RoundTelemetry {
  std::size_t announcement_violations = 0;
  double max_announced = 0.0;
  std::optional<ScheduleTriple> triple;
  double queue_linf = 0.0;
  double queue_l2 = 0.0;
  bool played_feasible = true;
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual SchedulerDecision decide(const QueueMatrix& q, const PreDecisionInfo& info) = 0;
  virtual void observe(const QueueMatrix& q, const Feedback& feedback) = 0;
  // Privileged baselines see more than the bandit model allows.
  virtual bool privileged() const { return false; }
  virtual std::size_t resets() const { return 0; }
  const RoundTelemetry& telemetry() const { return telemetry_; }

 protected:
  RoundTelemetry telemetry_;
};

// Everything a scheduler may know up front. Deliberately excludes the trace.
struct SchedulerContext {
  Topology topology;
  TraceMode mode = TraceMode::kStability;
  std::size_t horizon = 1;
  std::vector<Flow> flows;
  std::optional<BallSandwichedSet> arrival_set;  // utility mode
  ScheduleConstants constants;                   // utility mode (UMO2)
};

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::kNso;
  BaseLearnerKind base_learner = BaseLearnerKind::kStepGrid;
  std::optional<LinkAllocationPlan> fixed_plan;
  std::uint64_t seed = 0;
};

// Per-link AdaPFOL over the commodity simplex. Each round link (n, m)
// announces M ||Q_m - Q_n||_inf and is fed C_{n,m} (Q_m - Q_n).
class LinkLearners {
 public:
  LinkLearners(const Topology& topo, BaseLearnerKind kind, std::size_t horizon);
  LinkAllocationPlan decide(const QueueMatrix& q, RoundTelemetry& telemetry);
  void observe(const QueueMatrix& q, const CapacityMatrix& c, RoundTelemetry& telemetry);
  std::size_t resets() const;
  const AdaPFOL& learner(std::size_t l) const { return learners_.at(l); }

 private:
  Topology topo_;
  std::vector<AdaPFOL> learners_;
  std::vector<double> announced_;
};

class NsoScheduler final : public Scheduler {
 public:
  NsoScheduler(const SchedulerContext& ctx, BaseLearnerKind kind);
  SchedulerDecision decide(const QueueMatrix& q, const PreDecisionInfo& info) override;
  void observe(const QueueMatrix& q, const Feedback& feedback) override;
  std::size_t resets() const override { return links_.resets(); }
  const LinkLearners& links() const { return links_; }

 private:
  LinkLearners links_;
};

class Umo2Scheduler final : public Scheduler {
 public:
  // Throws ConstructionError when V, G or L is not positive.
  Umo2Scheduler(const SchedulerContext& ctx, BaseLearnerKind kind, std::uint64_t seed);
  SchedulerDecision decide(const QueueMatrix& q, const PreDecisionInfo& info) override;
  void observe(const QueueMatrix& q, const Feedback& feedback) override;
  std::size_t resets() const override { return links_.resets(); }
  const AdaBGD& bandit() const { return bgd_; }

 private:
  LinkLearners links_;
  std::vector<Flow> flows_;
  std::size_t servers_;
  double tradeoff_;
  AdaBGD bgd_;
  Rng rng_;
  ScheduleTriple triple_;
  std::vector<double> direction_;
  std::vector<double> rates_;
};

enum class BaselineKind { kOracleBackpressure, kUniformRandom, kFixedPlan };

class BaselineScheduler final : public Scheduler {
 public:
  // Utility mode plays the center of the arrival set every round.
  BaselineScheduler(const SchedulerContext& ctx, BaselineKind kind,
                    std::optional<LinkAllocationPlan> fixed_plan, std::uint64_t seed);
  SchedulerDecision decide(const QueueMatrix& q, const PreDecisionInfo& info) override;
  void observe(const QueueMatrix&, const Feedback&) override {}
  bool privileged() const override { return true; }

 private:
  Topology topo_;
  BaselineKind kind_;
  std::optional<LinkAllocationPlan> fixed_plan_;
  std::optional<std::vector<double>> center_rates_;
  std::vector<Flow> flows_;
  Rng rng_;
};

// Link allocation of the capacity-aware backpressure skyline: all mass on
// argmax_k C [Q_n^k - Q_m^k]_+ (lowest k on ties), idle (commodity n) when no
// differential is positive or the link is down.
LinkAllocationPlan backpressure_plan(const Topology& topo, const QueueMatrix& q,
                                     const CapacityMatrix& c);

std::unique_ptr<Scheduler> make_scheduler(const SchedulerConfig& config,
                                          const SchedulerContext& ctx);

}  // namespace advnet
