#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advnet/adversary.hpp"
#include "advnet/net_model.hpp"

namespace advnet {

struct RoundRecord {
  std::size_t t = 0;  // 1-based round
  double l1_queue = 0.0;
  double l2sq_queue = 0.0;
  double lyapunov = 0.0;  // L_t = |Q(t)|_2^2 / 2
  double drift = 0.0;     // L_{t+1} - L_t
  double utility = 0.0;
  double ref_utility = 0.0;
  double dpp = 0.0;  // drift - V utility
};

// Record for round t from Q(t) and Q(t+1).
RoundRecord make_round_record(std::size_t t, const QueueMatrix& before, const QueueMatrix& after,
                              double utility, double ref_utility, double tradeoff);

// drift_t = L_{t+1} - L_t for a log holding Q(1..T+1).
std::vector<double> drift_series(std::span<const QueueMatrix> queue_log);

// One round of sum_l <C_l (Q_m - Q_n), a_l - ref_l>.
double olo_regret_round(const Topology& topo, const CapacityMatrix& c, const QueueMatrix& q,
                        const LinkAllocationPlan& plan, const LinkAllocationPlan& ref_plan);

// Dynamic regret of the played plans against the reference allocations,
// measured with expected transmissions C a. queue_log holds at least Q(1..T).
double olo_regret_vs_reference(const AdversaryTrace& trace, std::span<const QueueMatrix> queue_log,
                               std::span<const LinkAllocationPlan> plan_log,
                               const ReferencePolicy& ref);

// Same quantity with realized transmissions mu(t) in place of C(t) a(t).
double olo_regret_realized(const AdversaryTrace& trace, std::span<const QueueMatrix> queue_log,
                           std::span<const TransmissionMatrix> mu_log, const ReferencePolicy& ref);

struct LemmaCheck {
  std::string name;
  bool applicable = false;
  double smaller = 0.0;  // side claimed to be the smaller one
  double larger = 0.0;
  bool holds = true;
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;
  bool all_hold() const;
  std::size_t violations() const;
};

// Evaluates the four sequence inequalities on `seq`:
//   three_quarter_sum  sum_t x_t / S_t^(1/4) <= 2 S_T^(3/4)           (x >= 0)
//   square_upper       sum x^2 <= 4 (sum x)^(3/2)                      (walk)
//   four_thirds_upper  sum x^(4/3) <= 2^(1/6) (sum x)^(7/6)            (walk)
//   four_thirds_lower  4^(-7/3) x_T^(7/3) <= sum x^(4/3)               (walk)
// "walk" means x_1 = 0, x >= 0 and steps of at most 1; lemmas whose
// precondition fails are marked not applicable. A check holds when
// smaller <= larger (1 + 1e-12).
LemmaReport lemma_oracles(std::span<const double> seq);

enum class SelfBoundingKind { kThreeQuarterLog, kThreeQuarterAndSevenEighth };

std::string_view to_string(SelfBoundingKind kind);

// Closed-form bound on y:
//   kThreeQuarterLog:            y <= f + y^(3/4) g log y
//                                => y <= (f^(1/4) + g log(2 (f^(1/4) + g)^2))^4
//   kThreeQuarterAndSevenEighth: y <= f + y^(3/4) g log y + y^(7/8) h
//                                => y <= (f^(1/8) + g^(1/2) log(2 (f^(1/8) + g^(1/2) + h)^2) + h)^8
// Throws ContractViolation when f, g or h < 1 (h is ignored by the first kind).
double self_bounding_bound(SelfBoundingKind kind, double f, double g, double h = 1.0);

// Largest y satisfying the hypothesis inequality, by log-spaced scan and
// bisection. Independent of the closed form.
double self_bounding_largest_root(SelfBoundingKind kind, double f, double g, double h = 1.0);

// Decimal notation with 12 significant digits, never an exponent.
std::string format_decimal(double v);

inline constexpr std::string_view kRoundCsvHeader =
    "t,l1_queue,l2sq_queue,lyapunov,drift,utility,ref_utility,dpp";

std::string round_csv_row(const RoundRecord& r);
void write_round_csv(std::ostream& out, std::span<const RoundRecord> records);

}  // namespace advnet
