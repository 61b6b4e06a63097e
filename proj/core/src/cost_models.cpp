#include "cfgtune/cost_models.hpp"

#include <cmath>
#include <string>

#include "cfgtune/error.hpp"

namespace cfgtune {

ModelShape ModelShape::of(const Configuration& config) {
  return {config.vocab_size(), config.num_layers(), config.hidden_size(),
          config.intermediate_size(), config.max_sequence_length()};
}

SizeBreakdown model_size_mb(const Configuration& config) {
  return model_size(ModelShape::of(config));
}

double forward_gflops(const Configuration& config) {
  return static_cast<double>(forward_flops(ModelShape::of(config))) / 1e9;
}

namespace {

void require_non_negative(double x, const char* what) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw ValidationError(std::string(what) + " must be a finite non-negative number");
  }
}

}  // namespace

Emissions emissions(double runtime_hours, double device_power_kw, double carbon_intensity) {
  require_non_negative(runtime_hours, "runtime_hours");
  require_non_negative(device_power_kw, "device_power_kw");
  return emissions_from_energy(runtime_hours * device_power_kw, carbon_intensity);
}

Emissions emissions_from_energy(double energy_kwh, double carbon_intensity) {
  require_non_negative(energy_kwh, "energy_kwh");
  require_non_negative(carbon_intensity, "carbon_intensity");
  return {energy_kwh, energy_kwh * carbon_intensity};
}

CostReport cost_report(const Configuration& config, double runtime_hours, double device_power_kw,
                       double carbon_intensity) {
  const auto e = emissions(runtime_hours, device_power_kw, carbon_intensity);
  return {model_size_mb(config).total_mb(), forward_gflops(config), e.energy_kwh, e.co2_kg};
}

SizeConstraint::SizeConstraint(double budget) : budget_mb(budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw ValidationError("size budget must be a positive number of MB");
  }
}

bool SizeConstraint::admits(const Configuration& config) const {
  return admits(model_size_mb(config).total_bytes());
}

}  // namespace cfgtune
