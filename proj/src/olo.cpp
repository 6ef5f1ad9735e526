#include "advnet/olo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "advnet/error.hpp"

namespace advnet {

namespace {

constexpr double kSimplexDiameter = 2.0;

std::vector<double> uniform(std::size_t dim) {
  return std::vector<double>(dim, 1.0 / static_cast<double>(dim));
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

void gradient_step(std::vector<double>& x, std::span<const double> loss, double eta) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= eta * loss[i];
  x = project_to_simplex(x);
}

}  // namespace

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw StructuralError("cannot project an empty vector onto the simplex");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::max(v[i] - theta, 0.0);
    total += out[i];
  }
  // Renormalize away rounding drift so the sum is 1 to machine precision.
  for (double& x : out) x /= total;
  return out;
}

FixedShareGradientLearner::FixedShareGradientLearner(std::size_t dim, std::size_t horizon)
    : x_(uniform(dim)), mix_(1.0 / static_cast<double>(std::max<std::size_t>(horizon, 1))) {}

void FixedShareGradientLearner::feed(std::span<const double> loss) {
  if (loss.size() != x_.size()) throw StructuralError("loss dimension mismatch");
  if (all_zero(loss)) return;
  const double g = linf_norm(loss);
  loss_sq_sum_ += g * g;
  gradient_step(x_, loss, kSimplexDiameter / std::sqrt(1.0 + loss_sq_sum_));
  const double share = mix_ / static_cast<double>(x_.size());
  for (double& v : x_) v = (1.0 - mix_) * v + share;
}

StepGridLearner::StepGridLearner(std::size_t dim, std::size_t horizon) {
  const double top = std::sqrt(1.0 + static_cast<double>(horizon));
  for (double m = 1.0;; m *= 2.0) {
    experts_.push_back({m, uniform(dim), 0.0});
    if (m >= top) break;
  }
}

std::vector<double> StepGridLearner::weights() const {
  const double k = static_cast<double>(experts_.size());
  const double rate = std::sqrt(2.0 * std::log(std::max(k, 2.0)) / (1.0 + loss_sq_sum_));
  double best = std::numeric_limits<double>::infinity();
  for (const Expert& e : experts_) best = std::min(best, e.cumulative_loss);
  std::vector<double> w(experts_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    w[i] = std::exp(-rate * (experts_[i].cumulative_loss - best));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> StepGridLearner::act() const {
  const std::vector<double> w = weights();
  std::vector<double> x(experts_.front().x.size(), 0.0);
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += w[i] * experts_[i].x[j];
  }
  return x;
}

void StepGridLearner::feed(std::span<const double> loss) {
  if (loss.size() != experts_.front().x.size()) throw StructuralError("loss dimension mismatch");
  if (all_zero(loss)) return;
  const double g = linf_norm(loss);
  loss_sq_sum_ += g * g;
  const double base_eta = kSimplexDiameter / std::sqrt(1.0 + loss_sq_sum_);
  for (Expert& e : experts_) {
    e.cumulative_loss += std::inner_product(loss.begin(), loss.end(), e.x.begin(), 0.0);
    gradient_step(e.x, loss, e.multiplier * base_eta);
  }
}

BaseLearnerKind parse_base_learner(std::string_view name) {
  if (name == "step_grid") return BaseLearnerKind::kStepGrid;
  if (name == "fixed_share_gradient") return BaseLearnerKind::kFixedShareGradient;
  throw ParseError(fmt::format("unknown base learner '{}'", name));
}

std::string_view to_string(BaseLearnerKind kind) {
  return kind == BaseLearnerKind::kStepGrid ? "step_grid" : "fixed_share_gradient";
}

BaseLearnerFactory make_base_learner_factory(BaseLearnerKind kind, std::size_t dim,
                                             std::size_t horizon) {
  if (dim == 0) throw ConstructionError("base learner needs a nonempty action set");
  if (kind == BaseLearnerKind::kStepGrid) {
    return [dim, horizon] { return std::make_unique<StepGridLearner>(dim, horizon); };
  }
  return [dim, horizon] { return std::make_unique<FixedShareGradientLearner>(dim, horizon); };
}

AdaPFOL::AdaPFOL(BaseLearnerFactory factory) : factory_(std::move(factory)), inner_(factory_()) {}

void AdaPFOL::announce_bound(double bound) {
  if (!(bound > 0.0)) {
    throw ContractViolation(fmt::format("announced loss bound must be positive, got {}", bound));
  }
  if (bound > scale_) {
    scale_ = 2.0 * bound;
    inner_ = factory_();
    ++resets_;
  }
}

void AdaPFOL::feed(std::span<const double> loss) {
  const double g = linf_norm(loss);
  if (g > scale_) {
    throw ContractViolation(
        fmt::format("loss magnitude {} exceeds the current scale {}", g, scale_));
  }
  loss_sq_sum_ += g * g;
  std::vector<double> normalized(loss.begin(), loss.end());
  for (double& v : normalized) v /= scale_;
  inner_->feed(normalized);
}

double measure_dynamic_regret(std::span<const std::vector<double>> losses,
                              std::span<const std::vector<double>> actions,
                              std::span<const std::vector<double>> comparators) {
  if (losses.size() != actions.size() || losses.size() != comparators.size()) {
    throw StructuralError("regret inputs have different lengths");
  }
  double regret = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    const auto& g = losses[t];
    if (actions[t].size() != g.size() || comparators[t].size() != g.size()) {
      throw StructuralError(fmt::format("dimension mismatch in round {}", t));
    }
    for (std::size_t i = 0; i < g.size(); ++i) regret += g[i] * (actions[t][i] - comparators[t][i]);
  }
  return regret;
}

}  // namespace advnet
