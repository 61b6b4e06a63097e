#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfgtune/config_space.hpp"
#include "cfgtune/error.hpp"
#include "cfgtune/indicator.hpp"
#include "cfgtune/surrogate.hpp"

namespace cfgtune {

struct DistillationBatch {
  std::vector<std::vector<double>> teacher_logits;
  std::vector<std::vector<double>> student_logits;
  double temperature = 1.0;
};

// Temperature-scaled distillation loss, averaged over examples:
//   -sum_j softmax(p/T)_j * log softmax(q/T)_j * T^2
// Minimized over the student logits q at q = p (up to a shift).
double kd_loss(const DistillationBatch& batch);

// Source of ground-truth effectiveness for configurations.
class EffectivenessOracle {
 public:
  virtual ~EffectivenessOracle() = default;

  virtual std::vector<double> evaluate_batch(std::span<const Configuration> configs) const = 0;
  double evaluate(const Configuration& config) const;

  virtual std::string describe() const = 0;
};

// Closed-form pseudo-accuracy, increasing with capacity:
//   0.55 + 0.40 * (0.5 g(h*l) + 0.3 g(i) + 0.1 g(v) + 0.1 bonus(tokenizer))
// where g(x) = ln(1 + x - lo) / ln(1 + hi - lo) over the factor's range in
// the space the oracle was built for, and bonus falls linearly from 1 for
// the first tokenizer option to 0 for the last. Optional Gaussian noise is
// seeded per configuration.
class SyntheticOracle final : public EffectivenessOracle {
 public:
  static constexpr double kBase = 0.55;
  static constexpr double kSpan = 0.40;

  explicit SyntheticOracle(const ConfigurationSpace& space, double noise_sigma = 0.0,
                           std::uint64_t noise_seed = 0);

  double accuracy(const Configuration& config) const;
  std::vector<double> evaluate_batch(std::span<const Configuration> configs) const override;
  std::string describe() const override;

  double max_accuracy() const { return kBase + kSpan; }

 private:
  struct Ramp {
    double lo = 0.0;
    double hi = 0.0;
    double operator()(double x) const;
  };

  Ramp capacity_;
  Ramp intermediate_;
  Ramp vocab_;
  std::vector<std::string> tokenizers_;
  double noise_sigma_;
  std::uint64_t noise_seed_;
};

inline constexpr std::chrono::seconds kDefaultOracleTimeout{24 * 3600};
inline constexpr const char* kOracleTimeoutEnv = "CFGTUNE_ORACLE_TIMEOUT";

// Timeout in seconds from CFGTUNE_ORACLE_TIMEOUT, else the 24 h default.
std::chrono::seconds oracle_timeout_from_env();

// Delegates evaluation to an external program:
//   <command> <request.jsonl> <response.jsonl>
// Request lines: {"id": k, "space_checksum": "...", "config": {...}}.
// Response lines: {"id": k, "effectiveness": x}, exactly one per request id.
class ExternalOracle final : public EffectivenessOracle {
 public:
  ExternalOracle(std::string command, ConfigurationSpace space,
                 std::chrono::milliseconds timeout = kDefaultOracleTimeout);

  std::vector<double> evaluate_batch(std::span<const Configuration> configs) const override;
  std::string describe() const override { return "external:" + command_; }

 private:
  std::string command_;
  ConfigurationSpace space_;
  std::chrono::milliseconds timeout_;
};

std::string write_oracle_request(std::span<const Configuration> configs,
                                 const ConfigurationSpace& space);
// Values in request order, clamped to [0, 1]. Throws OracleResponseError on
// malformed lines, unknown or duplicate ids, or missing ids.
std::vector<double> read_oracle_response(std::string_view document, std::size_t expected);

// "synthetic", "synthetic:sigma=<x>" or "external:<command>".
std::unique_ptr<EffectivenessOracle> make_oracle(std::string_view spec,
                                                 const ConfigurationSpace& space,
                                                 std::uint64_t seed = 0);

// Uses an oracle directly as the effectiveness indicator.
class OracleIndicator final : public Indicator {
 public:
  explicit OracleIndicator(const EffectivenessOracle& oracle) : oracle_(&oracle) {}
  Prediction predict(const Configuration& config) const override {
    return {oracle_->evaluate(config), 0.0};
  }

 private:
  const EffectivenessOracle* oracle_;
};

struct AuditTable {
  std::vector<Configuration> configs;
  std::vector<double> effectiveness;  // empty when the oracle failed
};

struct IndicatorBuild {
  SurrogateModel model;
  AuditTable table;
};

// Raised by build_indicator when the oracle fails; carries the sampled rows.
class IndicatorBuildError : public OracleError {
 public:
  IndicatorBuildError(const std::string& what, AuditTable partial)
      : OracleError(what), partial_(std::move(partial)) {}
  const AuditTable& partial() const { return partial_; }

 private:
  AuditTable partial_;
};

// Samples k configurations, evaluates them with the oracle and fits the
// surrogate on their raw encodings.
IndicatorBuild build_indicator(const ConfigurationSpace& space, const EffectivenessOracle& oracle,
                               std::size_t k, std::uint64_t seed,
                               const FitOptions& options = {});

}  // namespace cfgtune
