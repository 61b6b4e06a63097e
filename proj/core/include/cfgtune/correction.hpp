#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cfgtune/config_space.hpp"
#include "cfgtune/cost_models.hpp"

namespace cfgtune {

class Rng;

// Entries of the head-count dimension that divide hidden_size.
std::vector<std::int64_t> head_divisors(std::int64_t hidden_size, const Dimension& heads);

// Repairs a configuration so that it validates in space.
//
// Out-of-domain values are snapped to the nearest in-domain entry. If
// hidden_size is not divisible by num_attention_heads, the head count is
// resampled from the in-range divisors of hidden_size; when there are none,
// hidden_size is resampled (up to 100 attempts) from values that admit a
// divisor, and finally clamped deterministically. With a size budget, size
// dimensions are then shrunk at random until the model fits.
//
// Throws InfeasibleError if no (hidden_size, heads) pair, or no configuration
// within the budget, exists.
Configuration correct(const Configuration& config, const ConfigurationSpace& space, Rng& rng,
                      const std::optional<SizeConstraint>& budget = std::nullopt);

}  // namespace cfgtune
