#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>

#include "cfgtune/error.hpp"
#include "cfgtune/rng.hpp"
#include "cfgtune/surrogate.hpp"

namespace cfgtune {
namespace {

TrainingSet line_data() {
  TrainingSet data;
  for (int x = 0; x < 10; ++x) {
    const double xs[] = {static_cast<double>(x)};
    data.add(xs, 2.0 * x + 1.0);
  }
  return data;
}

TrainingSet random_data(Rng& rng, std::size_t n, std::size_t d, double noise) {
  std::vector<double> w(d);
  for (auto& x : w) x = rng.normal();
  TrainingSet data;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> x(d);
    double y = 0.3;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = 10.0 * rng.uniform01() - 3.0;
      y += w[j] * x[j];
    }
    data.add(x, y + noise * rng.normal());
  }
  return data;
}

// Closed-form ridge on min-max scaled features with an unpenalized
// intercept column: (A^T A + (alpha/beta) P) theta = A^T y.
Eigen::VectorXd closed_form_ridge(const TrainingSet& data, double alpha, double beta) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.features.front().size());
  Eigen::MatrixXd a(n, d + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = data.features[0][j];
    double hi = lo;
    for (const auto& row : data.features) {
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      a(r, j) = hi > lo ? (data.features[r][j] - lo) / (hi - lo) : 0.0;
    }
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    a(r, d) = 1.0;
    y(r) = data.targets[r];
  }
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(d + 1, d + 1) * (alpha / beta);
  penalty(d, d) = 0.0;
  return (a.transpose() * a + penalty).fullPivLu().solve(a.transpose() * y);
}

TEST(Fit, RecoversNoiseFreeLine) {
  const auto data = line_data();
  const auto model = fit(data);
  EXPECT_GT(model.alpha(), 0.0);
  EXPECT_GT(model.beta(), 0.0);
  for (int x = 0; x < 10; ++x) {
    const double xs[] = {static_cast<double>(x)};
    EXPECT_NEAR(model.predict(xs).mean, 2.0 * x + 1.0, 1e-6);
  }
}

TEST(Fit, FrozenHyperparametersMatchClosedFormRidge) {
  Rng rng(21);
  FitOptions frozen;
  frozen.update_hyperparameters = false;
  for (int trial = 0; trial < 20; ++trial) {
    const auto data = random_data(rng, 8 + rng.uniform_index(20), 1 + rng.uniform_index(6), 0.5);
    const auto model = fit(data, frozen);
    const auto theta = closed_form_ridge(data, 1.0, 1.0);
    const auto d = model.feature_count();
    for (std::size_t j = 0; j < d; ++j) {
      EXPECT_NEAR(model.weights()[j], theta(static_cast<Eigen::Index>(j)), 1e-8);
    }
    EXPECT_NEAR(model.intercept(), theta(static_cast<Eigen::Index>(d)), 1e-8);
  }
}

TEST(Fit, ConstantTargets) {
  Rng rng(22);
  auto data = random_data(rng, 12, 3, 0.0);
  std::fill(data.targets.begin(), data.targets.end(), 0.7);
  const auto model = fit(data);
  for (double w : model.weights()) EXPECT_NEAR(w, 0.0, 1e-9);
  const double probe[] = {100.0, -50.0, 3.0};
  EXPECT_NEAR(model.predict(probe).mean, 0.7, 1e-9);
}

TEST(Fit, PermutationInvariance) {
  Rng rng(23);
  const auto data = random_data(rng, 20, 5, 0.2);
  const auto base = fit(data);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    TrainingSet shuffled;
    for (auto k : order) shuffled.add(data.features[k], data.targets[k]);
    const auto model = fit(shuffled);
    for (std::size_t j = 0; j < base.feature_count(); ++j) {
      EXPECT_NEAR(model.weights()[j], base.weights()[j], 1e-10);
    }
  }
}

TEST(Fit, TwoRowsIsLegal) {
  TrainingSet data;
  const double a[] = {0.0, 1.0};
  const double b[] = {1.0, 3.0};
  data.add(a, 0.4);
  data.add(b, 0.6);
  const auto model = fit(data);
  EXPECT_TRUE(std::isfinite(model.predict(a).mean));
}

TEST(Fit, Errors) {
  TrainingSet one;
  const double x[] = {1.0};
  one.add(x, 0.5);
  EXPECT_THROW(fit(one), ValidationError);

  TrainingSet ragged = line_data();
  ragged.features[3].push_back(1.0);
  EXPECT_THROW(fit(ragged), ValidationError);

  const auto model = fit(line_data());
  const double wrong[] = {1.0, 2.0};
  EXPECT_THROW(model.predict(wrong), ValidationError);
}

TEST(Predict, VarianceGrowsAwayFromData) {
  Rng rng(24);
  const auto model = fit(random_data(rng, 15, 2, 0.3));
  const double near[] = {2.0, 2.0};
  const double far[] = {500.0, -400.0};
  EXPECT_LE(model.predict(near).variance, model.predict(far).variance);
  EXPECT_GT(model.predict(near).variance, 0.0);
}

TEST(Predict, MeanIsAffine) {
  Rng rng(25);
  const auto model = fit(random_data(rng, 15, 4, 0.3));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x1(4), x2(4), mix(4);
    const double lambda = rng.uniform01() * 3.0 - 1.0;
    for (std::size_t j = 0; j < 4; ++j) {
      x1[j] = 20.0 * rng.uniform01() - 10.0;
      x2[j] = 20.0 * rng.uniform01() - 10.0;
      mix[j] = lambda * x1[j] + (1.0 - lambda) * x2[j];
    }
    const double expected = lambda * model.predict(x1).mean + (1.0 - lambda) * model.predict(x2).mean;
    EXPECT_NEAR(model.predict(mix).mean, expected, 1e-9);
  }
}

TEST(Serialization, RoundTripPreservesPredictions) {
  Rng rng(26);
  auto model = fit(random_data(rng, 15, 3, 0.3));
  model.set_space_checksum("abc123");
  const auto restored = SurrogateModel::from_json(model.to_json());
  EXPECT_EQ(restored.space_checksum(), "abc123");
  const double probe[] = {1.0, 2.0, 3.0};
  EXPECT_EQ(restored.predict(probe).mean, model.predict(probe).mean);
  EXPECT_EQ(restored.predict(probe).variance, model.predict(probe).variance);
  EXPECT_THROW(SurrogateModel::from_json("{\"kind\": \"gp\"}"), ParseError);
  EXPECT_THROW(SurrogateModel::from_json("nope"), ParseError);
}

TEST(RSquared, Basics) {
  const double y[] = {1.0, 2.0, 3.0};
  EXPECT_EQ(r_squared(y, y), 1.0);
  const double mean[] = {2.0, 2.0, 2.0};
  EXPECT_EQ(r_squared(mean, y), 0.0);
}

}  // namespace
}  // namespace cfgtune
