#include "advnet/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "advnet/error.hpp"

namespace advnet {

Topology::Topology(std::size_t servers, std::vector<Link> links, double capacity_bound,
                   double arrival_bound)
    : servers_(servers),
      links_(std::move(links)),
      capacity_bound_(capacity_bound),
      arrival_bound_(arrival_bound),
      outgoing_(servers),
      incoming_(servers) {
  if (servers_ == 0) throw ConstructionError("topology needs at least one server");
  if (!(capacity_bound_ > 0.0)) throw ConstructionError("capacity bound M must be positive");
  if (!(arrival_bound_ >= 0.0)) throw ConstructionError("arrival bound R must be nonnegative");
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const Link& e = links_[l];
    if (e.from >= servers_ || e.to >= servers_) {
      throw ConstructionError(fmt::format("link {} ({} -> {}) has an endpoint outside [0, {})", l,
                                          e.from, e.to, servers_));
    }
    if (e.from == e.to) throw ConstructionError(fmt::format("link {} is a self-loop", l));
    for (std::size_t j = 0; j < l; ++j) {
      if (links_[j] == e) throw ConstructionError(fmt::format("link {} duplicates link {}", l, j));
    }
    outgoing_[e.from].push_back(l);
    incoming_[e.to].push_back(l);
  }
}

Topology Topology::line(std::size_t servers, bool bidirectional, double capacity_bound,
                        double arrival_bound) {
  std::vector<Link> links;
  for (std::size_t n = 0; n + 1 < servers; ++n) {
    links.push_back({n, n + 1});
    if (bidirectional) links.push_back({n + 1, n});
  }
  return Topology(servers, std::move(links), capacity_bound, arrival_bound);
}

double Topology::increment_bound() const {
  return 2.0 * static_cast<double>(servers_) * capacity_bound_ + arrival_bound_;
}

TransmissionMode parse_transmission_mode(std::string_view name) {
  if (name == "deterministic") return TransmissionMode::kDeterministic;
  if (name == "bernoulli") return TransmissionMode::kBernoulli;
  throw ParseError(fmt::format("unknown transmission mode '{}'", name));
}

std::string_view to_string(TransmissionMode mode) {
  return mode == TransmissionMode::kDeterministic ? "deterministic" : "bernoulli";
}

QueueMatrix zero_queues(const Topology& topo) {
  return QueueMatrix(topo.servers(), topo.servers());
}

ArrivalMatrix zero_arrivals(const Topology& topo) {
  return ArrivalMatrix(topo.servers(), topo.servers());
}

LinkAllocationPlan uniform_plan(const Topology& topo) {
  return LinkAllocationPlan(topo.link_count(), topo.servers(),
                            1.0 / static_cast<double>(topo.servers()));
}

namespace {

void check_shape(std::size_t rows, std::size_t cols, std::size_t want_rows, std::size_t want_cols,
                 std::string_view what) {
  if (rows != want_rows || cols != want_cols) {
    throw StructuralError(fmt::format("{} is {}x{}, topology expects {}x{}", what, rows, cols,
                                      want_rows, want_cols));
  }
}

}  // namespace

void check_queues(const QueueMatrix& q, const Topology& topo) {
  check_shape(q.rows(), q.cols(), topo.servers(), topo.servers(), "queue matrix");
  for (std::size_t n = 0; n < q.rows(); ++n) {
    if (q(n, n) != 0.0) throw ContractViolation(fmt::format("destination queue Q[{0}][{0}] != 0", n));
    for (double v : q.row(n)) {
      if (!(v >= 0.0)) throw ContractViolation("queue matrix has a negative entry");
    }
  }
}

void check_plan(const LinkAllocationPlan& plan, const Topology& topo) {
  check_shape(plan.rows(), plan.cols(), topo.link_count(), topo.servers(), "allocation plan");
  for (std::size_t l = 0; l < plan.rows(); ++l) {
    double sum = 0.0;
    for (double v : plan.row(l)) {
      if (v < -kFeasibilityTol || v > 1.0 + kFeasibilityTol) {
        throw ContractViolation(fmt::format("allocation on link {} leaves [0,1]", l));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kFeasibilityTol) {
      throw ContractViolation(fmt::format("allocation on link {} sums to {}", l, sum));
    }
  }
}

void check_capacities(const CapacityMatrix& c, const Topology& topo) {
  if (c.size() != topo.link_count()) {
    throw StructuralError(
        fmt::format("capacity vector has {} links, topology has {}", c.size(), topo.link_count()));
  }
  for (std::size_t l = 0; l < c.size(); ++l) {
    if (c[l] < 0.0 || c[l] > topo.capacity_bound()) {
      throw ContractViolation(fmt::format("capacity of link {} outside [0, M]", l));
    }
  }
}

void check_transmissions(const TransmissionMatrix& mu, const Topology& topo) {
  check_shape(mu.rows(), mu.cols(), topo.link_count(), topo.servers(), "transmission matrix");
  for (double v : mu.values()) {
    if (v < 0.0 || v > topo.capacity_bound()) {
      throw ContractViolation("transmission outside [0, M]");
    }
  }
}

void check_arrivals(const ArrivalMatrix& lam, const Topology& topo) {
  check_shape(lam.rows(), lam.cols(), topo.servers(), topo.servers(), "arrival matrix");
  for (double v : lam.values()) {
    if (v < 0.0 || v > topo.arrival_bound() + kFeasibilityTol) {
      throw ContractViolation("arrival outside [0, R]");
    }
  }
}

QueueMatrix step(const QueueMatrix& q, const TransmissionMatrix& mu, const ArrivalMatrix& lam,
                 const Topology& topo) {
  const std::size_t n_servers = topo.servers();
  check_shape(q.rows(), q.cols(), n_servers, n_servers, "queue matrix");
  check_shape(mu.rows(), mu.cols(), topo.link_count(), n_servers, "transmission matrix");
  check_shape(lam.rows(), lam.cols(), n_servers, n_servers, "arrival matrix");

  QueueMatrix next(n_servers, n_servers);
  for (std::size_t n = 0; n < n_servers; ++n) {
    for (std::size_t k = 0; k < n_servers; ++k) {
      if (k == n) continue;
      double out = 0.0;
      for (std::size_t l : topo.outgoing(n)) out += mu(l, k);
      double in = 0.0;
      for (std::size_t l : topo.incoming(n)) in += mu(l, k);
      next(n, k) = std::max(q(n, k) - out, 0.0) + in + lam(n, k);
    }
  }
  return next;
}

TransmissionMatrix realize_transmissions(const CapacityMatrix& c, const LinkAllocationPlan& plan,
                                         TransmissionMode mode, const Topology& topo, Rng& rng) {
  if (c.size() != topo.link_count()) {
    throw StructuralError("capacity vector does not match the topology's links");
  }
  check_shape(plan.rows(), plan.cols(), topo.link_count(), topo.servers(), "allocation plan");

  const double cap = topo.capacity_bound();
  TransmissionMatrix mu(plan.rows(), plan.cols());
  for (std::size_t l = 0; l < plan.rows(); ++l) {
    for (std::size_t k = 0; k < plan.cols(); ++k) {
      const double mean = std::clamp(c[l] * plan(l, k), 0.0, cap);
      if (mode == TransmissionMode::kDeterministic) {
        mu(l, k) = mean;
      } else {
        std::bernoulli_distribution coin(mean / cap);
        mu(l, k) = coin(rng) ? cap : 0.0;
      }
    }
  }
  return mu;
}

double queue_l1(const QueueMatrix& q) {
  double s = 0.0;
  for (double v : q.values()) s += v;
  return s;
}

double queue_l2sq(const QueueMatrix& q) {
  double s = 0.0;
  for (double v : q.values()) s += v * v;
  return s;
}

double queue_linf(const QueueMatrix& q) {
  double m = 0.0;
  for (double v : q.values()) m = std::max(m, v);
  return m;
}

}  // namespace advnet
