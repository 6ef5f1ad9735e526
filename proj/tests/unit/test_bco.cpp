#include <doctest.h>

#include <cmath>

#include "advnet/bco.hpp"
#include "advnet/error.hpp"

using namespace advnet;

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

ScheduleConstants example_constants() {
  ScheduleConstants c;
  c.path_constant = 1.0;
  c.path_exponent = 0.25;
  c.horizon = 10000;
  c.tradeoff = 1.0;
  c.utility_bound = 1.0;
  c.lipschitz = 1.0;
  c.servers = 3;
  c.capacity_bound = 1.0;
  c.arrival_bound = 1.0;
  return c;
}

}  // namespace

TEST_CASE("set radii") {
  const auto box = BallSandwichedSet::box(4, -0.5, 0.5);
  CHECK(box.inner_radius() == 0.5);
  CHECK(box.outer_radius() == doctest::Approx(1.0));
  const auto ball = BallSandwichedSet::ball({0.0, 0.0}, 2.0);
  CHECK(ball.inner_radius() == 2.0);
  CHECK(ball.outer_radius() == 2.0);
}

TEST_CASE("first-round step size matches the high-precision value") {
  // d = 2, r = 1: B = 10, X1 = 10^(7/3) 16^(28/9) 7^(4/3), X2 = 10 * 4^(4/3),
  // first increment ((VG)^2 (VL)^2)^(1/3) = 1. Evaluated at 40 digits.
  QueueAdaptiveSchedule s(example_constants(), 1.0, 2);
  CHECK(s.guard_x1() == doctest::Approx(16079842.00372879473687).epsilon(1e-12));
  CHECK(s.guard_x2() == doctest::Approx(63.49604207872797899).epsilon(1e-12));
  const ScheduleTriple t = s.next(0.0, 0.0);
  CHECK(t.eta == doctest::Approx(2.214559537808123689930e-5).epsilon(1e-12));
  CHECK(t.delta == doctest::Approx(0.04457750773090041188).epsilon(1e-12));
  CHECK(t.alpha == doctest::Approx(0.04457750773090041188).epsilon(1e-12));
}

TEST_CASE("schedule identities across queue paths") {
  QueueAdaptiveSchedule s(example_constants(), 1.0, 2);
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  double prev_eta = INFINITY;
  for (int t = 0; t < 500; ++t) {
    const double linf = u(rng);
    const double l2 = linf * (1.0 + u(rng) / 50.0);
    const ScheduleTriple tr = s.next(linf, l2);
    CHECK(tr.eta < prev_eta);
    CHECK(tr.alpha < 1.0);
    const double lhs = tr.delta * tr.delta * tr.delta;
    const double rhs = tr.eta * 4.0 * (linf + 1.0) * (linf + 1.0) / (l2 + 1.0);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);
    prev_eta = tr.eta;
  }
}

TEST_CASE("played point sits at distance delta from a centered iterate") {
  AdaBGD bgd(BallSandwichedSet::box(2, -1.0, 1.0));
  Rng rng(5);
  const auto play = bgd.act({0.01, 0.1, 0.1}, rng);
  CHECK(norm2(play.point) == doctest::Approx(0.1).epsilon(1e-14));
  const auto still = bgd.act({0.01, 0.0, 0.0}, rng);
  CHECK(norm2(still.point) == 0.0);
}

TEST_CASE("sphere samples are centered") {
  Rng rng(17);
  const int n = 100000;
  std::vector<double> sum(3, 0.0), sq(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto s = sample_unit_sphere(3, rng);
    REQUIRE(norm2(s) == doctest::Approx(1.0));
    for (int k = 0; k < 3; ++k) {
      sum[k] += s[k];
      sq[k] += s[k] * s[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / n;
    const double se = std::sqrt((sq[k] / n - mean * mean) / n);
    CHECK(std::abs(mean) <= 5.0 * se);
  }
}

TEST_CASE("feed steps against the estimate and projects onto the shrunk ball") {
  const std::vector<double> dir{-1.0, 0.0};
  // eta (d / delta) loss s = (0.5, 0) with eta = 0.05, d = 2, delta = 0.1, loss = 0.5, s = (1, 0).
  {
    AdaBGD bgd(BallSandwichedSet::ball({0.0, 0.0}, 1.0));
    bgd.feed({0.05, 0.1, 0.1}, 0.5, std::vector<double>{1.0, 0.0});
    CHECK(bgd.iterate()[0] == doctest::Approx(-0.5));
    CHECK(bgd.iterate()[1] == 0.0);
  }
  {
    AdaBGD bgd(BallSandwichedSet::ball({0.0, 0.0}, 1.0));
    bgd.feed({0.05, 0.1, 0.1}, 2.0, std::vector<double>{1.0, 0.0});
    CHECK(bgd.iterate()[0] == doctest::Approx(-0.9));
  }
  {
    AdaBGD bgd(BallSandwichedSet::ball({0.0, 0.0}, 1.0));
    bgd.feed({0.05, 0.1, 0.1}, 0.0, dir);
    CHECK(bgd.iterate() == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("box projection clips coordinates") {
  const auto box = BallSandwichedSet::box(2, -1.0, 1.0);
  const auto p = box.project_shrunk(std::vector<double>{2.0, -0.3}, 0.5);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == -0.3);
}

TEST_CASE("gradient estimator") {
  Rng rng(23);
  const std::vector<double> y{0.1, -0.2, 0.3};
  SUBCASE("linear loss recovers its slope") {
    const std::vector<double> c{1.0, -2.0, 0.5};
    const auto est = gradient_estimator_mean(
        [&](std::span<const double> x) { return c[0] * x[0] + c[1] * x[1] + c[2] * x[2]; }, y,
        0.2, 100000, rng);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(est.mean[k] - c[k]) <= 5.0 * est.standard_error[k]);
  }
  SUBCASE("constant loss averages to zero") {
    const auto est = gradient_estimator_mean([](std::span<const double>) { return 3.0; }, y, 0.2,
                                             100000, rng);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(est.mean[k]) <= 5.0 * est.standard_error[k]);
  }
  SUBCASE("centered quadratic averages to zero") {
    const std::vector<double> origin{0.0, 0.0, 0.0};
    const auto est = gradient_estimator_mean(
        [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }, origin,
        0.2, 100000, rng);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(est.mean[k]) <= 5.0 * est.standard_error[k] + 1e-15);
  }
}

TEST_CASE("schedule rejects a zero tradeoff") {
  ScheduleConstants c = example_constants();
  c.tradeoff = 0.0;
  CHECK_THROWS_AS(QueueAdaptiveSchedule(c, 1.0, 2), ConstructionError);
}
