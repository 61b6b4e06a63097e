#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cfgtune/config_space.hpp"
#include "cfgtune/cost_models.hpp"

namespace cfgtune {

// A slice of a parent space; itself a valid space.
using Subspace = ConfigurationSpace;

// The size-relevant dimension with the most entries (vocab_size on ties).
Dim partition_dimension(const ConfigurationSpace& space);

// Splits space into at most n contiguous, disjoint subspaces along
// partition_dimension(). Returns fewer when that dimension has fewer than n
// entries.
std::vector<Subspace> partition(const ConfigurationSpace& space, std::size_t n);

// True iff some configuration of space with dim = value fits the budget.
// Model size is strictly increasing in every size dimension, so the minimum
// is attained with every other size dimension at its smallest entry.
bool is_feasible_value(const ConfigurationSpace& space, Dim dim, const Value& value,
                       const SizeConstraint& constraint);
bool is_feasible_value(const ConfigurationSpace& space, std::string_view dim_name,
                       const Value& value, const SizeConstraint& constraint);

// Smallest achievable model (every size dimension at its first entry).
ModelShape min_corner(const ConfigurationSpace& space);

// Drops every size-dimension entry that cannot appear in a configuration
// within the budget. Subspaces are solved concurrently and merged; the
// result does not depend on the partition count. Throws InfeasibleError if
// nothing fits.
ConfigurationSpace prune(const ConfigurationSpace& space, const SizeConstraint& constraint,
                         std::size_t partitions = 1);

struct DimensionRetention {
  std::string name;
  std::string original_min;
  std::string original_max;
  std::string retained_min;
  std::string retained_max;
  std::uint64_t original_size = 0;
  std::uint64_t retained_size = 0;
};

struct PruneReport {
  double budget_mb = 0.0;
  std::size_t partitions = 1;
  Count original_cardinality = 0;
  Count pruned_cardinality = 0;
  std::vector<DimensionRetention> dimensions;

  double cardinality_ratio() const {
    return to_double(pruned_cardinality) / to_double(original_cardinality);
  }
};

PruneReport make_prune_report(const ConfigurationSpace& original, const ConfigurationSpace& pruned,
                              const SizeConstraint& constraint, std::size_t partitions);

std::string prune_report_json(const PruneReport& report);

}  // namespace cfgtune
