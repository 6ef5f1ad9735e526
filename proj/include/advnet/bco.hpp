#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "advnet/net_model.hpp"

namespace advnet {

enum class SetGeometry { kBox, kBall };

std::string_view to_string(SetGeometry g);
SetGeometry parse_set_geometry(std::string_view name);

// Convex action set with r B <= X <= R B around its own center. All learner
// arithmetic happens in centered coordinates (center at the origin); callers
// translate with to_original() / to_centered().
class BallSandwichedSet {
 public:
  // [lo, hi]^dim: r = (hi - lo) / 2, R = r sqrt(dim).
  static BallSandwichedSet box(std::size_t dim, double lo, double hi);
  // Box of half-width `half` around `center`.
  static BallSandwichedSet box_around(std::vector<double> center, double half);
  // Euclidean ball: r = R = radius.
  static BallSandwichedSet ball(std::vector<double> center, double radius);

  SetGeometry geometry() const { return geometry_; }
  std::size_t dim() const { return center_.size(); }
  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }
  const std::vector<double>& center() const { return center_; }
  // Box bounds in original coordinates (box geometry only).
  double lo() const { return center_.front() - inner_; }
  double hi() const { return center_.front() + inner_; }

  // Euclidean projection of a centered point onto (1 - alpha) X.
  std::vector<double> project_shrunk(std::span<const double> y, double alpha) const;
  bool contains_centered(std::span<const double> x, double tol = kFeasibilityTol) const;

  std::vector<double> to_original(std::span<const double> centered) const;
  std::vector<double> to_centered(std::span<const double> original) const;

 private:
  BallSandwichedSet(SetGeometry g, std::vector<double> center, double inner, double outer)
      : geometry_(g), center_(std::move(center)), inner_(inner), outer_(outer) {}
  SetGeometry geometry_;
  std::vector<double> center_;
  double inner_;
  double outer_;
};

struct ScheduleTriple {
  double eta = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
};

// Known constants the queue-adaptive schedule is built from.
struct ScheduleConstants {
  double path_constant = 1.0;   // C^lambda
  double path_exponent = 0.25;  // delta_lambda
  std::size_t horizon = 1;      // T
  double tradeoff = 1.0;        // V
  double utility_bound = 1.0;   // G
  double lipschitz = 1.0;       // L
  std::size_t servers = 1;      // N
  double capacity_bound = 1.0;  // M
  double arrival_bound = 0.0;   // R
};

// Step size, exploration radius and shrink factor driven by queue magnitudes:
//   B     = C^lambda T^(1/2 - delta_lambda)
//   X1    = B^(7/3) (4 r^-3 d^2)^(28/9) (2NM + R)^(4/3)
//   X2    = B (r^-3 d^2 V G^2 / L)^(4/3)
//   S_t   = sum_{s<=t} ((|Q_s|_inf + VG)^2 (|Q_s|_2 + VL)^2)^(1/3)
//   eta_t = (B / (X1 + X2 + S_t))^(3/4)
//   delta_t = (eta_t d^2 (|Q_t|_inf + VG)^2 / (|Q_t|_2 + VL))^(1/3),  alpha_t = delta_t / r
// The guards X1, X2 keep alpha_t < 1 for every queue path the dynamics allow.
class QueueAdaptiveSchedule {
 public:
  QueueAdaptiveSchedule(const ScheduleConstants& c, double inner_radius, std::size_t dim);

  // Advances S_t by this round's increment and returns the triple.
  // Throws InvariantFailure if alpha >= 1.
  ScheduleTriple next(double queue_linf, double queue_l2);

  double guard_x1() const { return x1_; }
  double guard_x2() const { return x2_; }
  double accumulated() const { return accumulated_; }

 private:
  double budget_;
  double x1_;
  double x2_;
  double vg_;
  double vl_;
  double inner_radius_;
  double dim_;
  double accumulated_ = 0.0;
};

// Classic decaying schedule eta_t = eta0 t^-3/4, delta_t = delta0 t^-1/4.
ScheduleTriple polynomial_schedule(std::size_t t, double eta0, double delta0, double inner_radius);

std::vector<double> sample_unit_sphere(std::size_t dim, Rng& rng);

// One-point bandit gradient descent over a ball-sandwiched set:
//   x_t = y_t + delta_t s_t
//   y_{t+1} = Proj_{(1 - alpha_t) X}[y_t - eta_t (d / delta_t) loss_t s_t]
class AdaBGD {
 public:
  struct Play {
    std::vector<double> point;      // centered coordinates, inside X
    std::vector<double> direction;  // the unit vector s_t
  };

  explicit AdaBGD(BallSandwichedSet set);
  AdaBGD(BallSandwichedSet set, const ScheduleConstants& constants);

  // Requires the queue-adaptive schedule.
  ScheduleTriple schedule(const QueueMatrix& q);

  // If alpha_t grew since the last update, y is first pulled into (1 - alpha_t) X
  // so the played point stays feasible.
  Play act(const ScheduleTriple& triple, Rng& rng);
  void feed(const ScheduleTriple& triple, double loss_value, std::span<const double> direction);

  const BallSandwichedSet& set() const { return set_; }
  const std::vector<double>& iterate() const { return y_; }
  const std::optional<QueueAdaptiveSchedule>& queue_schedule() const { return schedule_; }

 private:
  BallSandwichedSet set_;
  std::vector<double> y_;
  std::optional<QueueAdaptiveSchedule> schedule_;
};

struct EstimatorMean {
  std::vector<double> mean;
  std::vector<double> standard_error;
};

// Monte Carlo mean of (d / delta) loss(y + delta s) s over uniform unit s.
EstimatorMean gradient_estimator_mean(const std::function<double(std::span<const double>)>& loss,
                                      std::span<const double> y, double delta,
                                      std::size_t samples, Rng& rng);

}  // namespace advnet
