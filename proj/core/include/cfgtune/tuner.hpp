#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfgtune/archive.hpp"
#include "cfgtune/config_space.hpp"
#include "cfgtune/correction.hpp"
#include "cfgtune/cost_models.hpp"
#include "cfgtune/indicator.hpp"

namespace cfgtune {

class Rng;

struct TunerParams {
  std::size_t population_size = 20;
  std::size_t generations = 50;
  double crossover_rate = 0.6;
  double mutation_rate = 0.1;
  std::size_t tournament_size = 2;
  std::uint64_t seed = 0;
  // Candidates drawn per slot by adaptive random initialization.
  std::size_t art_candidates = 10;
  // Model size budget enforced by correction; nullopt disables it.
  std::optional<double> budget_mb = 3.0;

  // Throws ValidationError on out-of-range values.
  void validate() const;
};

// Best-of-k adaptive random initialization: each new member is the corrected
// candidate whose minimum normalized Euclidean distance to the members chosen
// so far is largest.
std::vector<Configuration> adaptive_random_init(
    const ConfigurationSpace& space, std::size_t n, Rng& rng, std::size_t candidates = 10,
    const std::optional<SizeConstraint>& budget = std::nullopt);
std::vector<Configuration> adaptive_random_init(const ConfigurationSpace& space, std::size_t n,
                                                std::uint64_t seed);

double normalized_distance(const Configuration& a, const Configuration& b,
                           const ConfigurationSpace& space);

// Children p1[0:x1] + p2[x1:x2] + p1[x2:] and p2[0:x1] + p1[x1:x2] + p2[x2:]
// for 0 <= x1 < x2 <= 13.
std::pair<Configuration, Configuration> crossover_at(const Configuration& p1,
                                                     const Configuration& p2, std::size_t x1,
                                                     std::size_t x2);
// Cut points drawn uniformly over all valid (x1, x2) pairs.
std::pair<Configuration, Configuration> two_point_crossover(const Configuration& p1,
                                                            const Configuration& p2, Rng& rng);

// Each dimension is redrawn uniformly from its domain with probability rate.
Configuration boundary_random_mutation(const Configuration& config,
                                       const ConfigurationSpace& space, double rate, Rng& rng);

// count binary (or larger) tournaments over pool. The winner is a
// non-dominated entrant; ties go to the larger crowding distance (computed
// over the whole pool), then uniformly at random.
std::vector<Individual> tournament_select(std::span<const Individual> pool, std::size_t count,
                                          std::size_t tournament_size, Rng& rng);

struct GenerationRecord {
  std::size_t generation = 0;
  std::size_t archive_size = 0;
  // Reference point: per-objective maxima over everything evaluated so far.
  double hypervolume = 0.0;
  ObjectiveVector best;  // per-objective minima over the archive
  std::vector<ObjectiveVector> archive;
};

struct TuneResult {
  ParetoArchive archive;
  std::vector<GenerationRecord> history;
  // Objectives of every individual evaluated, in evaluation order.
  std::vector<ObjectiveVector> evaluated;
  // Every configuration placed in a population, in order.
  std::vector<Configuration> visited;
};

// Scores a configuration: size and FLOPs from the cost models, negated mean
// effectiveness (clamped to [0, 1]) from the indicator.
Individual evaluate_individual(const Configuration& config, const Indicator& indicator);

// Multi-objective tuning: adaptive random initialization, then per
// generation two-point crossover, boundary random mutation, correction,
// archive update and tournament selection over parents and offspring.
TuneResult tune(const ConfigurationSpace& space, const Indicator& indicator,
                const TunerParams& params);

// Member closest to target_mb; ties prefer higher effectiveness, then fewer
// FLOPs. Throws ValidationError on an empty archive.
Individual select_deployment_config(std::span<const Individual> members, double target_mb);

// Pareto-front file: one JSON record per line, sorted by size.
std::string write_front(std::span<const Individual> members);
std::vector<Individual> read_front(std::string_view document, const ConfigurationSpace& space);
// Same, reading configurations without a space (values typed by JSON kind).
std::vector<Individual> read_front(std::string_view document);

std::string generation_record_json(const GenerationRecord& record);

}  // namespace cfgtune
