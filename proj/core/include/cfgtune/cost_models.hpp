#pragma once

#include <cstdint>

#include "cfgtune/config_space.hpp"

namespace cfgtune {

inline constexpr double kBytesPerMb = 1024.0 * 1024.0;

// kg CO2 per kWh; 0.32 kWh -> 0.14 kg.
inline constexpr double kDefaultCarbonIntensity = 0.4375;

// The size-relevant shape of a transformer classifier.
struct ModelShape {
  std::int64_t vocab_size = 0;
  std::int64_t num_layers = 0;
  std::int64_t hidden_size = 0;
  std::int64_t intermediate_size = 0;
  std::int64_t max_sequence_length = 0;

  static ModelShape of(const Configuration& config);
};

struct SizeBreakdown {
  std::uint64_t embedding_bytes = 0;
  std::uint64_t transformer_bytes = 0;
  std::uint64_t classifier_bytes = 0;

  std::uint64_t total_bytes() const { return embedding_bytes + transformer_bytes + classifier_bytes; }
  double embedding_mb() const { return static_cast<double>(embedding_bytes) / kBytesPerMb; }
  double transformer_mb() const { return static_cast<double>(transformer_bytes) / kBytesPerMb; }
  double classifier_mb() const { return static_cast<double>(classifier_bytes) / kBytesPerMb; }
  double total_mb() const { return static_cast<double>(total_bytes()) / kBytesPerMb; }
};

// Serialized fp32 size: embeddings 4(v+s+3)h, per layer 4(4h^2+(9+2i)h+i),
// classifier head 2h^2+4h+2 bytes.
constexpr SizeBreakdown model_size(const ModelShape& m) {
  const auto v = static_cast<std::uint64_t>(m.vocab_size);
  const auto l = static_cast<std::uint64_t>(m.num_layers);
  const auto h = static_cast<std::uint64_t>(m.hidden_size);
  const auto i = static_cast<std::uint64_t>(m.intermediate_size);
  const auto s = static_cast<std::uint64_t>(m.max_sequence_length);
  SizeBreakdown out;
  out.embedding_bytes = 4 * (v + s + 3) * h;
  out.transformer_bytes = 4 * (4 * h * h + (9 + 2 * i) * h + i) * l;
  out.classifier_bytes = 2 * h * h + 4 * h + 2;
  return out;
}

SizeBreakdown model_size_mb(const Configuration& config);

// Forward-pass FLOPs at full sequence length, 2 FLOPs per multiply-accumulate:
// l(8sh^2 + 4s^2h + 4shi) + 4h^2.
constexpr std::uint64_t forward_flops(const ModelShape& m) {
  const auto l = static_cast<std::uint64_t>(m.num_layers);
  const auto h = static_cast<std::uint64_t>(m.hidden_size);
  const auto i = static_cast<std::uint64_t>(m.intermediate_size);
  const auto s = static_cast<std::uint64_t>(m.max_sequence_length);
  return l * (8 * s * h * h + 4 * s * s * h + 4 * s * h * i) + 4 * h * h;
}

double forward_gflops(const Configuration& config);

struct Emissions {
  double energy_kwh = 0.0;
  double co2_kg = 0.0;
};

// Throws ValidationError on negative input.
Emissions emissions(double runtime_hours, double device_power_kw,
                    double carbon_intensity = kDefaultCarbonIntensity);
Emissions emissions_from_energy(double energy_kwh,
                                double carbon_intensity = kDefaultCarbonIntensity);

struct CostReport {
  double size_mb = 0.0;
  double gflops = 0.0;
  double energy_kwh = 0.0;
  double co2_kg = 0.0;
};

CostReport cost_report(const Configuration& config, double runtime_hours, double device_power_kw,
                       double carbon_intensity = kDefaultCarbonIntensity);

// Upper bound on model size.
struct SizeConstraint {
  double budget_mb = 3.0;

  explicit SizeConstraint(double budget = 3.0);

  bool admits(std::uint64_t size_bytes) const {
    return static_cast<double>(size_bytes) <= budget_mb * kBytesPerMb;
  }
  bool admits(const Configuration& config) const;
};

}  // namespace cfgtune
