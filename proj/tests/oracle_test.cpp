#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cfgtune/error.hpp"
#include "cfgtune/oracle.hpp"
#include "cfgtune/pruner.hpp"
#include "cfgtune/rng.hpp"
#include "support.hpp"

namespace cfgtune {
namespace {

// Direct evaluation of the loss from its definition, without max-shifting.
double reference_kd(const std::vector<double>& p, const std::vector<double>& q, double t) {
  double zp = 0.0;
  double zq = 0.0;
  for (double x : p) zp += std::exp(x / t);
  for (double x : q) zq += std::exp(x / t);
  double loss = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    loss -= std::exp(p[j] / t) / zp * std::log(std::exp(q[j] / t) / zq);
  }
  return loss * t * t;
}

double single(const std::vector<double>& p, const std::vector<double>& q, double t) {
  return kd_loss({{p}, {q}, t});
}

TEST(KdLoss, UniformIsLnTwo) {
  EXPECT_NEAR(single({0.0, 0.0}, {0.0, 0.0}, 1.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(single({3.0, 3.0, 3.0, 3.0}, {-1.0, -1.0, -1.0, -1.0}, 1.0), std::log(4.0), 1e-12);
}

TEST(KdLoss, MatchesDefinition) {
  EXPECT_NEAR(single({10.0, 0.0}, {0.0, 10.0}, 1.0), reference_kd({10.0, 0.0}, {0.0, 10.0}, 1.0),
              1e-9);
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(5), q(5);
    for (auto& x : p) x = 4.0 * rng.normal();
    for (auto& x : q) x = 4.0 * rng.normal();
    const double t = 0.5 + 4.0 * rng.uniform01();
    EXPECT_NEAR(single(p, q, t), reference_kd(p, q, t), 1e-9);
  }
}

TEST(KdLoss, GradientVanishesAtTeacher) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(6);
    for (auto& x : p) x = 3.0 * rng.normal();
    const double t = 1.0 + 3.0 * rng.uniform01();
    const double h = 1e-5;
    for (std::size_t j = 0; j < p.size(); ++j) {
      auto plus = p;
      auto minus = p;
      plus[j] += h;
      minus[j] -= h;
      const double grad = (single(p, plus, t) - single(p, minus, t)) / (2 * h);
      EXPECT_NEAR(grad, 0.0, 1e-4);
    }
  }
}

TEST(KdLoss, ShiftInvariance) {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(4), q(4);
    for (auto& x : p) x = 2.0 * rng.normal();
    for (auto& x : q) x = 2.0 * rng.normal();
    const double c = 20.0 * rng.uniform01() - 10.0;
    auto ps = p;
    auto qs = q;
    for (auto& x : ps) x += c;
    for (auto& x : qs) x += c;
    EXPECT_NEAR(single(ps, qs, 2.0), single(p, q, 2.0), 1e-10);
  }
}

TEST(KdLoss, BoundedBelowByScaledEntropy) {
  Rng rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(4), q(4);
    for (auto& x : p) x = 2.0 * rng.normal();
    for (auto& x : q) x = 2.0 * rng.normal();
    EXPECT_GE(single(p, q, 1.5) + 1e-12, single(p, p, 1.5));
  }
}

TEST(KdLoss, AveragesOverBatch) {
  DistillationBatch batch{{{1.0, 2.0}, {0.0, 0.0}}, {{2.0, 1.0}, {0.0, 0.0}}, 1.0};
  EXPECT_NEAR(kd_loss(batch), 0.5 * (single({1.0, 2.0}, {2.0, 1.0}, 1.0) + std::log(2.0)), 1e-12);
}

TEST(KdLoss, Errors) {
  EXPECT_THROW(single({0.0, 0.0}, {0.0, 0.0}, 0.0), ValidationError);
  EXPECT_THROW(single({0.0, 0.0}, {0.0, 0.0, 0.0}, 1.0), ValidationError);
  EXPECT_THROW(single({0.0}, {0.0}, 1.0), ValidationError);
  EXPECT_THROW(kd_loss({{}, {}, 1.0}), ValidationError);
}

Configuration corner(const ConfigurationSpace& space, bool top) {
  Rng rng(1);
  auto c = sample_raw(space, rng);
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const auto& dim = space.dimensions()[k];
    c.at(k) = dim.value_at(top ? dim.size() - 1 : 0);
  }
  c[Dim::tokenizer] = space.dimension(Dim::tokenizer).value_at(top ? 0 : space.dimension(Dim::tokenizer).size() - 1);
  c[Dim::num_attention_heads] = std::int64_t{1};
  return c;
}

TEST(SyntheticOracle, RangeAndExtremes) {
  const auto space = testing::transformer_space();
  const SyntheticOracle oracle(space);
  EXPECT_NEAR(oracle.accuracy(corner(space, true)), 0.95, 1e-12);
  EXPECT_NEAR(oracle.accuracy(corner(space, false)), 0.55, 1e-12);
  for (const auto& c : sample_uniform(space, 500, 35)) {
    const double a = oracle.accuracy(c);
    EXPECT_GE(a, 0.55);
    EXPECT_LE(a, 0.95);
  }
}

TEST(SyntheticOracle, MonotoneInCapacity) {
  const auto space = testing::transformer_space();
  const SyntheticOracle oracle(space);
  for (auto c : sample_uniform(space, 200, 36)) {
    const double before = oracle.accuracy(c);
    if (c.num_layers() < 12) {
      c[Dim::num_hidden_layers] = c.num_layers() + 1;
      EXPECT_GT(oracle.accuracy(c), before);
    }
  }
}

TEST(SyntheticOracle, NoiseIsDeterministicPerConfiguration) {
  const auto space = testing::transformer_space();
  const SyntheticOracle noisy(space, 0.02, 7);
  const auto configs = sample_uniform(space, 30, 37);
  const auto a = noisy.evaluate_batch(configs);
  std::vector<Configuration> reversed(configs.rbegin(), configs.rend());
  auto b = noisy.evaluate_batch(reversed);
  std::reverse(b.begin(), b.end());
  EXPECT_EQ(a, b);
  const SyntheticOracle clean(space);
  int differing = 0;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    differing += a[k] != clean.accuracy(configs[k]);
    EXPECT_GE(a[k], 0.0);
    EXPECT_LE(a[k], 1.0);
  }
  EXPECT_GT(differing, 20);
}

TEST(MakeOracle, Specs) {
  const auto space = testing::transformer_space();
  EXPECT_EQ(make_oracle("synthetic", space)->describe(), "synthetic");
  EXPECT_NE(make_oracle("synthetic:sigma=0.01", space)->describe().find("0.01"), std::string::npos);
  EXPECT_EQ(make_oracle("external:true", space)->describe(), "external:true");
  EXPECT_THROW(make_oracle("random", space), ValidationError);
  EXPECT_THROW(make_oracle("synthetic:sigma=-1", space), ValidationError);
}

class ExternalOracleTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("cfgtune_oracle_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string script(const std::string& body) {
    const auto path = dir_ / "eval.sh";
    std::ofstream(path) << "#!/bin/sh\n" << body;
    std::filesystem::permissions(path, std::filesystem::perms::owner_all);
    return path.string();
  }

  std::filesystem::path dir_;
};

// Answers 0.5 + 0.01 * id for every request line.
constexpr const char* kEchoScript =
    "sed -n 's/^{\"id\":\\([0-9]*\\),.*/\\1/p' \"$1\" | "
    "awk '{printf \"{\\\"id\\\":%d,\\\"effectiveness\\\":%.2f}\\n\", $1, 0.5 + 0.01 * $1}' > \"$2\"\n";

TEST_F(ExternalOracleTest, RoundTrip) {
  const auto space = testing::transformer_space();
  const ExternalOracle oracle(script(kEchoScript), space, std::chrono::seconds(30));
  const auto configs = sample_uniform(space, 5, 38);
  const auto values = oracle.evaluate_batch(configs);
  ASSERT_EQ(values.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(values[k], 0.5 + 0.01 * k, 1e-12);
}

TEST_F(ExternalOracleTest, NonZeroExit) {
  const auto space = testing::transformer_space();
  const ExternalOracle oracle(script("exit 3\n"), space, std::chrono::seconds(30));
  EXPECT_THROW(oracle.evaluate_batch(sample_uniform(space, 2, 39)), OracleProcessError);
}

TEST_F(ExternalOracleTest, MalformedResponse) {
  const auto space = testing::transformer_space();
  const ExternalOracle oracle(script("echo 'not json' > \"$2\"\n"), space, std::chrono::seconds(30));
  EXPECT_THROW(oracle.evaluate_batch(sample_uniform(space, 2, 40)), OracleResponseError);
}

TEST_F(ExternalOracleTest, Timeout) {
  const auto space = testing::transformer_space();
  const ExternalOracle oracle(script("sleep 30\n"), space, std::chrono::milliseconds(300));
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(oracle.evaluate_batch(sample_uniform(space, 1, 41)), OracleTimeoutError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
}

TEST(OracleResponse, Parsing) {
  EXPECT_EQ(read_oracle_response("{\"id\":1,\"effectiveness\":0.7}\n{\"id\":0,\"effectiveness\":1.4}\n", 2),
            (std::vector<double>{1.0, 0.7}));
  EXPECT_THROW(read_oracle_response("{\"id\":0,\"effectiveness\":0.7}\n", 2), OracleResponseError);
  EXPECT_THROW(read_oracle_response("{\"id\":0,\"effectiveness\":0.7}\n{\"id\":0,\"effectiveness\":0.7}\n", 1),
               OracleResponseError);
  EXPECT_THROW(read_oracle_response("{\"id\":5,\"effectiveness\":0.7}\n", 1), OracleResponseError);
  EXPECT_THROW(read_oracle_response("{\"id\":0}\n", 1), OracleResponseError);
}

TEST(OracleTimeout, FromEnvironment) {
  ::setenv(kOracleTimeoutEnv, "17", 1);
  EXPECT_EQ(oracle_timeout_from_env(), std::chrono::seconds(17));
  ::unsetenv(kOracleTimeoutEnv);
  EXPECT_EQ(oracle_timeout_from_env(), kDefaultOracleTimeout);
}

TEST(BuildIndicator, FitsThePrunedSpace) {
  const auto pruned = prune(testing::transformer_space(), SizeConstraint(3.0), 50);
  const SyntheticOracle oracle(pruned);
  const auto build = build_indicator(pruned, oracle, 20, 42);
  EXPECT_EQ(build.table.configs.size(), 20u);
  EXPECT_EQ(build.model.space_checksum(), pruned.checksum());

  const SurrogateIndicator indicator(build.model, pruned);
  const auto holdout = sample_uniform(pruned, 300, 43);
  std::vector<double> predicted;
  std::vector<double> observed;
  for (const auto& c : holdout) {
    predicted.push_back(indicator.predict(c).mean);
    observed.push_back(oracle.accuracy(c));
  }
  EXPECT_GT(r_squared(predicted, observed), 0.5);
}

TEST(BuildIndicator, DeterministicAndMinimal) {
  const auto space = testing::transformer_space();
  const SyntheticOracle oracle(space);
  const auto a = build_indicator(space, oracle, 20, 44);
  const auto b = build_indicator(space, oracle, 20, 44);
  EXPECT_EQ(a.model.to_json(), b.model.to_json());
  EXPECT_EQ(a.table.configs, b.table.configs);
  EXPECT_NO_THROW(build_indicator(space, oracle, 2, 45));
  EXPECT_THROW(build_indicator(space, oracle, 1, 45), ValidationError);
}

class FailingOracle final : public EffectivenessOracle {
 public:
  std::vector<double> evaluate_batch(std::span<const Configuration>) const override {
    throw OracleProcessError("evaluator crashed");
  }
  std::string describe() const override { return "failing"; }
};

TEST(BuildIndicator, OracleFailureCarriesSampledRows) {
  const auto space = testing::transformer_space();
  try {
    build_indicator(space, FailingOracle{}, 5, 46);
    FAIL() << "expected IndicatorBuildError";
  } catch (const IndicatorBuildError& e) {
    EXPECT_EQ(e.partial().configs.size(), 5u);
    EXPECT_TRUE(e.partial().effectiveness.empty());
  }
}

}  // namespace
}  // namespace cfgtune
