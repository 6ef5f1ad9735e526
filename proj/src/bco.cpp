#include "advnet/bco.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "advnet/error.hpp"

namespace advnet {

namespace {

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(SetGeometry g) { return g == SetGeometry::kBox ? "box" : "ball"; }

SetGeometry parse_set_geometry(std::string_view name) {
  if (name == "box") return SetGeometry::kBox;
  if (name == "ball") return SetGeometry::kBall;
  throw ParseError(fmt::format("unknown set geometry '{}'", name));
}

BallSandwichedSet BallSandwichedSet::box(std::size_t dim, double lo, double hi) {
  if (dim == 0) throw ConstructionError("action set needs dimension >= 1");
  if (!(hi > lo)) throw ConstructionError("box needs hi > lo");
  const double half = 0.5 * (hi - lo);
  return BallSandwichedSet(SetGeometry::kBox, std::vector<double>(dim, 0.5 * (lo + hi)), half,
                           half * std::sqrt(static_cast<double>(dim)));
}

BallSandwichedSet BallSandwichedSet::box_around(std::vector<double> center, double half) {
  if (center.empty()) throw ConstructionError("action set needs dimension >= 1");
  if (!(half > 0.0)) throw ConstructionError("box needs a positive half-width");
  const double outer = half * std::sqrt(static_cast<double>(center.size()));
  return BallSandwichedSet(SetGeometry::kBox, std::move(center), half, outer);
}

BallSandwichedSet BallSandwichedSet::ball(std::vector<double> center, double radius) {
  if (center.empty()) throw ConstructionError("action set needs dimension >= 1");
  if (!(radius > 0.0)) throw ConstructionError("ball needs a positive radius");
  return BallSandwichedSet(SetGeometry::kBall, std::move(center), radius, radius);
}

std::vector<double> BallSandwichedSet::project_shrunk(std::span<const double> y,
                                                      double alpha) const {
  if (y.size() != dim()) throw StructuralError("point dimension does not match the action set");
  const double shrink = 1.0 - alpha;
  std::vector<double> out(y.begin(), y.end());
  if (geometry_ == SetGeometry::kBox) {
    const double bound = shrink * inner_;
    for (double& v : out) v = std::clamp(v, -bound, bound);
  } else {
    const double bound = shrink * inner_;
    const double norm = l2_norm(out);
    if (norm > bound) {
      for (double& v : out) v *= bound / norm;
    }
  }
  return out;
}

bool BallSandwichedSet::contains_centered(std::span<const double> x, double tol) const {
  if (x.size() != dim()) return false;
  if (geometry_ == SetGeometry::kBox) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return std::abs(v) <= inner_ + tol; });
  }
  return l2_norm(x) <= inner_ + tol;
}

std::vector<double> BallSandwichedSet::to_original(std::span<const double> centered) const {
  std::vector<double> out(centered.begin(), centered.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += center_[i];
  return out;
}

std::vector<double> BallSandwichedSet::to_centered(std::span<const double> original) const {
  std::vector<double> out(original.begin(), original.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= center_[i];
  return out;
}

QueueAdaptiveSchedule::QueueAdaptiveSchedule(const ScheduleConstants& c, double inner_radius,
                                             std::size_t dim)
    : vg_(c.tradeoff * c.utility_bound),
      vl_(c.tradeoff * c.lipschitz),
      inner_radius_(inner_radius),
      dim_(static_cast<double>(dim)) {
  if (!(c.tradeoff > 0.0)) throw ConstructionError("schedule needs V > 0");
  if (!(c.utility_bound > 0.0)) throw ConstructionError("schedule needs utility bound G > 0");
  if (!(c.lipschitz > 0.0)) throw ConstructionError("schedule needs Lipschitz constant L > 0");
  if (!(c.path_constant > 0.0)) throw ConstructionError("schedule needs path constant > 0");
  if (c.horizon == 0) throw ConstructionError("schedule needs horizon T >= 1");
  if (!(inner_radius > 0.0)) throw ConstructionError("schedule needs inner radius r > 0");

  const double d2 = dim_ * dim_;
  const double r_inv3 = 1.0 / (inner_radius * inner_radius * inner_radius);
  const double increment = 2.0 * static_cast<double>(c.servers) * c.capacity_bound + c.arrival_bound;
  budget_ = c.path_constant * std::pow(static_cast<double>(c.horizon), 0.5 - c.path_exponent);
  x1_ = std::pow(budget_, 7.0 / 3.0) * std::pow(4.0 * r_inv3 * d2, 28.0 / 9.0) *
        std::pow(increment, 4.0 / 3.0);
  x2_ = budget_ * std::pow(r_inv3 * d2 * c.tradeoff * c.utility_bound * c.utility_bound / c.lipschitz,
                           4.0 / 3.0);
}

ScheduleTriple QueueAdaptiveSchedule::next(double queue_linf, double queue_l2) {
  const double magnitude = queue_linf + vg_;
  const double lipschitz = queue_l2 + vl_;
  accumulated_ += std::cbrt(magnitude * magnitude * lipschitz * lipschitz);

  ScheduleTriple out;
  out.eta = std::pow(budget_ / (x1_ + x2_ + accumulated_), 0.75);
  out.delta = std::cbrt(out.eta * dim_ * dim_ * magnitude * magnitude / lipschitz);
  out.alpha = out.delta / inner_radius_;
  if (!(out.alpha < 1.0)) {
    throw InvariantFailure(fmt::format("schedule produced alpha = {} >= 1", out.alpha));
  }
  return out;
}

ScheduleTriple polynomial_schedule(std::size_t t, double eta0, double delta0,
                                   double inner_radius) {
  const double tt = static_cast<double>(std::max<std::size_t>(t, 1));
  ScheduleTriple out;
  out.eta = eta0 * std::pow(tt, -0.75);
  out.delta = delta0 * std::pow(tt, -0.25);
  out.alpha = out.delta / inner_radius;
  return out;
}

std::vector<double> sample_unit_sphere(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> s(dim);
  double norm = 0.0;
  do {
    for (double& v : s) v = normal(rng);
    norm = l2_norm(s);
  } while (norm == 0.0);
  for (double& v : s) v /= norm;
  return s;
}

AdaBGD::AdaBGD(BallSandwichedSet set) : set_(std::move(set)), y_(set_.dim(), 0.0) {}

AdaBGD::AdaBGD(BallSandwichedSet set, const ScheduleConstants& constants)
    : set_(std::move(set)), y_(set_.dim(), 0.0) {
  schedule_.emplace(constants, set_.inner_radius(), set_.dim());
}

ScheduleTriple AdaBGD::schedule(const QueueMatrix& q) {
  if (!schedule_) throw ContractViolation("AdaBGD was built without a queue-adaptive schedule");
  return schedule_->next(queue_linf(q), std::sqrt(queue_l2sq(q)));
}

AdaBGD::Play AdaBGD::act(const ScheduleTriple& triple, Rng& rng) {
  if (!(triple.alpha < 1.0)) throw ContractViolation("alpha must be < 1");
  y_ = set_.project_shrunk(y_, triple.alpha);
  Play play;
  play.direction = sample_unit_sphere(set_.dim(), rng);
  play.point = y_;
  for (std::size_t i = 0; i < y_.size(); ++i) play.point[i] += triple.delta * play.direction[i];
  return play;
}

void AdaBGD::feed(const ScheduleTriple& triple, double loss_value,
                  std::span<const double> direction) {
  if (direction.size() != y_.size()) throw StructuralError("direction dimension mismatch");
  const double gain = triple.eta * static_cast<double>(y_.size()) / triple.delta * loss_value;
  for (std::size_t i = 0; i < y_.size(); ++i) y_[i] -= gain * direction[i];
  y_ = set_.project_shrunk(y_, triple.alpha);
}

EstimatorMean gradient_estimator_mean(const std::function<double(std::span<const double>)>& loss,
                                      std::span<const double> y, double delta,
                                      std::size_t samples, Rng& rng) {
  if (!(delta > 0.0)) throw ContractViolation("exploration radius must be positive");
  if (samples < 2) throw ContractViolation("need at least two samples");
  const std::size_t d = y.size();
  std::vector<double> sum(d, 0.0);
  std::vector<double> sum_sq(d, 0.0);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::vector<double> s = sample_unit_sphere(d, rng);
    for (std::size_t j = 0; j < d; ++j) x[j] = y[j] + delta * s[j];
    const double scale = static_cast<double>(d) / delta * loss(x);
    for (std::size_t j = 0; j < d; ++j) {
      const double v = scale * s[j];
      sum[j] += v;
      sum_sq[j] += v * v;
    }
  }
  const double n = static_cast<double>(samples);
  EstimatorMean out{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t j = 0; j < d; ++j) {
    out.mean[j] = sum[j] / n;
    const double var = (sum_sq[j] - n * out.mean[j] * out.mean[j]) / (n - 1.0);
    out.standard_error[j] = std::sqrt(std::max(var, 0.0) / n);
  }
  return out;
}

}  // namespace advnet
