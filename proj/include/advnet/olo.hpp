#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace advnet {

// Euclidean projection onto the probability simplex (sort-and-threshold).
std::vector<double> project_to_simplex(std::span<const double> v);

// Full-information online linear learner over the probability simplex. Losses
// handed to feed() always satisfy ||g||_inf <= 1.
class BaseLearner {
 public:
  virtual ~BaseLearner() = default;
  virtual std::vector<double> act() const = 0;
  virtual void feed(std::span<const double> loss) = 0;
};

using BaseLearnerFactory = std::function<std::unique_ptr<BaseLearner>()>;

// Projected gradient descent with self-confident steps
//   eta_t = D / sqrt(1 + sum_{s<=t} ||g_s||_inf^2),  D = 2 (l1 diameter),
// followed by a fixed-share mix toward uniform with weight 1/horizon.
class FixedShareGradientLearner final : public BaseLearner {
 public:
  FixedShareGradientLearner(std::size_t dim, std::size_t horizon);
  std::vector<double> act() const override { return x_; }
  void feed(std::span<const double> loss) override;

 private:
  std::vector<double> x_;
  double mix_;
  double loss_sq_sum_ = 0.0;
};

// Hedge over projected-gradient experts whose self-confident steps are scaled
// by 1, 2, 4, ... up to sqrt(1 + horizon). Each expert is tuned for a different
// comparator path length; the mixture tracks whichever suits the stream.
class StepGridLearner final : public BaseLearner {
 public:
  StepGridLearner(std::size_t dim, std::size_t horizon);
  std::vector<double> act() const override;
  void feed(std::span<const double> loss) override;

  std::size_t expert_count() const { return experts_.size(); }

 private:
  struct Expert {
    double multiplier;
    std::vector<double> x;
    double cumulative_loss = 0.0;
  };
  std::vector<Expert> experts_;
  double loss_sq_sum_ = 0.0;
  std::vector<double> weights() const;
};

enum class BaseLearnerKind { kStepGrid, kFixedShareGradient };

BaseLearnerKind parse_base_learner(std::string_view name);
std::string_view to_string(BaseLearnerKind kind);

BaseLearnerFactory make_base_learner_factory(BaseLearnerKind kind, std::size_t dim,
                                             std::size_t horizon);

// Magnitude-doubling wrapper. Each round the caller announces a bound G_t on
// the coming loss; when G_t exceeds the running scale the scale becomes 2 G_t
// and the inner learner restarts. Losses reach the inner learner divided by
// the scale.
class AdaPFOL {
 public:
  explicit AdaPFOL(BaseLearnerFactory factory);

  // Throws ContractViolation when bound <= 0.
  void announce_bound(double bound);
  std::vector<double> act() const { return inner_->act(); }
  // Throws ContractViolation when ||loss||_inf > scale().
  void feed(std::span<const double> loss);

  double scale() const { return scale_; }
  std::size_t resets() const { return resets_; }
  double loss_sq_sum() const { return loss_sq_sum_; }

 private:
  BaseLearnerFactory factory_;
  std::unique_ptr<BaseLearner> inner_;
  double scale_ = 1.0;
  std::size_t resets_ = 0;
  double loss_sq_sum_ = 0.0;
};

// sum_t <g_t, x_t - comparator_t>.
double measure_dynamic_regret(std::span<const std::vector<double>> losses,
                              std::span<const std::vector<double>> actions,
                              std::span<const std::vector<double>> comparators);

double linf_norm(std::span<const double> v);

}  // namespace advnet
