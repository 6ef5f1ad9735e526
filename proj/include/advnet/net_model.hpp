#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace advnet {

using Rng = std::mt19937_64;

// Absolute tolerance for simplex and box membership checks.
inline constexpr double kFeasibilityTol = 1e-9;

struct Link {
  std::size_t from = 0;
  std::size_t to = 0;
  bool operator==(const Link&) const = default;
};

// Servers 0..N-1, directed links, capacity bound M and arrival bound R.
class Topology {
 public:
  Topology() = default;
  Topology(std::size_t servers, std::vector<Link> links, double capacity_bound,
           double arrival_bound);

  // Servers 0..n-1 joined in a chain; both directions when bidirectional.
  static Topology line(std::size_t servers, bool bidirectional, double capacity_bound,
                       double arrival_bound);

  std::size_t servers() const { return servers_; }
  std::size_t link_count() const { return links_.size(); }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(std::size_t l) const { return links_.at(l); }
  double capacity_bound() const { return capacity_bound_; }
  double arrival_bound() const { return arrival_bound_; }

  // Link indices leaving / entering server n.
  const std::vector<std::size_t>& outgoing(std::size_t n) const { return outgoing_.at(n); }
  const std::vector<std::size_t>& incoming(std::size_t n) const { return incoming_.at(n); }

  // Largest possible one-round change of any single queue: 2NM + R.
  double increment_bound() const;

  bool operator==(const Topology& o) const {
    return servers_ == o.servers_ && links_ == o.links_ &&
           capacity_bound_ == o.capacity_bound_ && arrival_bound_ == o.arrival_bound_;
  }

 private:
  std::size_t servers_ = 0;
  std::vector<Link> links_;
  double capacity_bound_ = 0.0;
  double arrival_bound_ = 0.0;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<std::vector<std::size_t>> incoming_;
};

// Dense row-major grid of reals. The tag keeps queue, arrival, plan and
// transmission matrices from being mixed up.
template <class Tag>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Q[n][k]: backlog of commodity k at server n.
using QueueMatrix = Grid<struct QueueTag>;
// lambda[n][k]: arrivals of commodity k at server n.
using ArrivalMatrix = Grid<struct ArrivalTag>;
// a[l][k]: probability that link l serves commodity k.
using LinkAllocationPlan = Grid<struct PlanTag>;
// mu[l][k]: jobs of commodity k moved over link l.
using TransmissionMatrix = Grid<struct TransmissionTag>;

// C[l]: capacity of link l this round.
class CapacityMatrix {
 public:
  CapacityMatrix() = default;
  explicit CapacityMatrix(std::size_t links, double fill = 0.0) : values_(links, fill) {}
  explicit CapacityMatrix(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t l) { return values_[l]; }
  double operator[](std::size_t l) const { return values_[l]; }
  std::span<const double> values() const { return values_; }

  bool operator==(const CapacityMatrix&) const = default;

 private:
  std::vector<double> values_;
};

enum class TransmissionMode { kDeterministic, kBernoulli };

TransmissionMode parse_transmission_mode(std::string_view name);
std::string_view to_string(TransmissionMode mode);

QueueMatrix zero_queues(const Topology& topo);
ArrivalMatrix zero_arrivals(const Topology& topo);
LinkAllocationPlan uniform_plan(const Topology& topo);

// Shape and bound checks; each throws StructuralError or ContractViolation.
void check_queues(const QueueMatrix& q, const Topology& topo);
void check_plan(const LinkAllocationPlan& plan, const Topology& topo);
void check_capacities(const CapacityMatrix& c, const Topology& topo);
void check_transmissions(const TransmissionMatrix& mu, const Topology& topo);
void check_arrivals(const ArrivalMatrix& lam, const Topology& topo);

// One round of the queue dynamics:
//   Q'[n][k] = [Q[n][k] - sum_out mu]_+ + sum_in mu + lambda[n][k]   (k != n)
//   Q'[k][k] = 0
// Incoming flow is credited in full even when the upstream queue was short.
QueueMatrix step(const QueueMatrix& q, const TransmissionMatrix& mu, const ArrivalMatrix& lam,
                 const Topology& topo);

// Draws mu with E[mu] = C * a. Deterministic mode returns C * a; Bernoulli mode
// returns M * Bernoulli(C * a / M) independently per (link, commodity).
TransmissionMatrix realize_transmissions(const CapacityMatrix& c, const LinkAllocationPlan& plan,
                                         TransmissionMode mode, const Topology& topo, Rng& rng);

double queue_l1(const QueueMatrix& q);
double queue_l2sq(const QueueMatrix& q);
double queue_linf(const QueueMatrix& q);

}  // namespace advnet
