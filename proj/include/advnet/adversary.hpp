#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advnet/bco.hpp"
#include "advnet/net_model.hpp"

namespace advnet {

enum class TraceMode { kStability, kUtility };
enum class CapacityFamily { kPiecewise, kDrift, kJamming };
enum class UtilityFamily { kLog, kLinearQuadratic };

TraceMode parse_trace_mode(std::string_view name);
std::string_view to_string(TraceMode mode);
CapacityFamily parse_capacity_family(std::string_view name);
std::string_view to_string(CapacityFamily family);
UtilityFamily parse_utility_family(std::string_view name);
std::string_view to_string(UtilityFamily family);

// Commodity `destination` entering the network at `source`.
struct Flow {
  std::size_t source = 0;
  std::size_t destination = 0;
  bool operator==(const Flow&) const = default;
};

// Flow-coordinate vector <-> arrival matrix.
std::vector<double> flow_vector(const ArrivalMatrix& lam, std::span<const Flow> flows);
ArrivalMatrix arrival_matrix(std::span<const double> rates, std::span<const Flow> flows,
                             std::size_t servers);

// One round's utility g_t over the flow vector (original, untranslated coordinates).
//   log:              g(x) = sum_f w_f log(1 + x_f)            params = w
//   linear-quadratic: g(x) = sum_f (a_f x_f - b_f x_f^2 / 2)   params = a ++ b
class UtilitySpec {
 public:
  UtilitySpec(UtilityFamily family, std::vector<double> params);
  UtilityFamily family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t dim() const;
  double evaluate(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;

 private:
  UtilityFamily family_;
  std::vector<double> params_;
};

struct Window {
  std::size_t start = 0;  // first round, 0-based
  std::size_t length = 0;
  bool operator==(const Window&) const = default;
};

// P_t <= constant * t^(1/2 - exponent) for all t.
struct PathBudget {
  double constant = 0.0;
  double exponent = 0.25;
  bool operator==(const PathBudget&) const = default;
};

// Oblivious environment: everything fixed before any scheduler runs.
struct AdversaryTrace {
  Topology topology;
  TraceMode mode = TraceMode::kStability;
  std::vector<Flow> flows;
  std::vector<CapacityMatrix> capacities;
  std::vector<ArrivalMatrix> arrivals;  // stability mode only
  // Utility mode only.
  UtilityFamily utility_family = UtilityFamily::kLog;
  std::vector<std::vector<double>> utility_params;
  double utility_bound = 0.0;
  double lipschitz = 0.0;
  std::optional<BallSandwichedSet> arrival_set;

  std::size_t rounds() const { return capacities.size(); }
  UtilitySpec utility(std::size_t t) const { return {utility_family, utility_params.at(t)}; }
};

struct ReferencePolicy {
  std::vector<LinkAllocationPlan> allocations;
  std::vector<ArrivalMatrix> arrivals;  // utility mode only
  std::vector<Window> windows;
  double slack = 0.0;            // epsilon_W
  double window_constant = 0.0;  // C_W
  PathBudget allocation_budget;
  PathBudget arrival_budget;
};

struct AdversaryParams {
  CapacityFamily family = CapacityFamily::kPiecewise;
  // Piecewise-stationary phases; the phases double as the windows.
  std::size_t phase_min = 100;
  std::size_t phase_max = 1000;
  double capacity_lo = 0.9;
  double capacity_hi = 1.0;
  // Sinusoidal drift: C_l(t) = base + amplitude sin(2 pi t / period + 2 pi l / L).
  double drift_base = 0.9;
  double drift_amplitude = 0.1;
  std::size_t drift_period = 1000;
  // Jamming: capacity `jam_base`, bursts of zero capacity on a random link.
  double jam_base = 1.0;
  double jam_probability = 0.001;
  std::size_t jam_length = 5;
  // Window length for drift and jamming families.
  std::size_t window_length = 1000;

  std::vector<Flow> flows;
  std::vector<double> flow_rates;  // stability mode
  double arrival_jitter = 0.0;     // uniform +/- jitter around each rate

  UtilityFamily utility_family = UtilityFamily::kLog;
  std::vector<double> utility_weights;    // log: w; linear-quadratic: a
  std::vector<double> utility_curvature;  // linear-quadratic: b
  double utility_amplitude = 0.0;
  std::size_t utility_period = 1000;
  SetGeometry arrival_geometry = SetGeometry::kBox;
  double arrival_lo = 0.0;
  double arrival_hi = 1.0;
  std::vector<double> arrival_center;
  double arrival_radius = 0.0;

  // Reference construction fails below this slack.
  double min_slack = 0.0;
  double allocation_exponent = 0.25;  // delta_a
  double arrival_exponent = 0.25;     // delta_lambda
};

struct GeneratedTrace {
  AdversaryTrace trace;
  ReferencePolicy reference;
};

// Throws ConstructionError naming the window when the reference cannot reach
// `min_slack`.
GeneratedTrace generate_trace(const Topology& topo, const AdversaryParams& params, TraceMode mode,
                              std::size_t rounds, std::uint64_t seed);

// Builds the certified reference for an already materialized trace. Utility
// mode picks one constant arrival vector for the whole horizon.
ReferencePolicy build_reference(const AdversaryTrace& trace, std::span<const Window> windows,
                                const AdversaryParams& params);

struct StabilityVerdict {
  bool accepted = false;
  double slack = 0.0;  // epsilon_W when accepted
  std::size_t window = 0;
  std::size_t server = 0;
  std::size_t commodity = 0;
  double deficit = 0.0;  // how far the first violated triple falls short
};

// Checks the windowed service-versus-arrival inequality for every window and
// every (server, commodity) with server != commodity. Destination rows are
// exempt since their queues are identically zero.
StabilityVerdict verify_piecewise_stability(const AdversaryTrace& trace, const ReferencePolicy& ref,
                                            const Topology& topo);

// Partition, window-constant and path-budget checks. Empty when all hold.
std::vector<std::string> check_reference_invariants(const AdversaryTrace& trace,
                                                    const ReferencePolicy& ref);

// Uniform point of the arrival set, original coordinates.
std::vector<double> sample_in_set(const BallSandwichedSet& set, Rng& rng);

// Randomized spot check of one utility over the arrival set: midpoint
// concavity, |g| <= bound and |g(x) - g(y)| <= lipschitz ||x - y||_2, each
// with 1e-9 slack. Returns the number of violated checks.
std::size_t count_utility_violations(const UtilitySpec& g, const BallSandwichedSet& set,
                                     double bound, double lipschitz, std::size_t pairs, Rng& rng);

// sum_t ||x_t - x_{t+1}||_1. Throws ContractViolation on an empty sequence.
double path_length(std::span<const std::vector<double>> seq);

// Running path lengths P_1..P_T of a plan sequence (summed over links).
std::vector<double> running_path_lengths(std::span<const LinkAllocationPlan> plans);
std::vector<double> running_path_lengths(std::span<const ArrivalMatrix> arrivals);

// Smallest constant c with P_t <= c t^(1/2 - exponent) for every t.
double tightest_path_constant(std::span<const double> running, double exponent);

// sum_j (|W_j| - 1)^2 / T.
double window_constant(std::span<const Window> windows, std::size_t rounds);

}  // namespace advnet
