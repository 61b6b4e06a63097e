#pragma once

#include <array>
#include <span>
#include <vector>

#include "cfgtune/config_space.hpp"

namespace cfgtune {

// All three objectives are minimized.
struct ObjectiveVector {
  double size_mb = 0.0;
  double gflops = 0.0;
  double neg_effectiveness = 0.0;

  std::array<double, 3> as_array() const { return {size_mb, gflops, neg_effectiveness}; }
  double effectiveness() const { return -neg_effectiveness; }

  friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
  friend auto operator<=>(const ObjectiveVector&, const ObjectiveVector&) = default;
};

// u <= v componentwise with at least one strict improvement.
bool dominates(const ObjectiveVector& u, const ObjectiveVector& v);

struct Individual {
  Configuration config;
  ObjectiveVector objectives;
  double effectiveness_variance = 0.0;
};

// Mutually non-dominated individuals. A candidate whose objectives equal a
// member's is rejected, so the first-inserted configuration is kept.
class ParetoArchive {
 public:
  // True if the candidate entered the archive.
  bool insert(const Individual& candidate);
  void update(std::span<const Individual> candidates);

  const std::vector<Individual>& members() const { return members_; }
  std::vector<ObjectiveVector> objectives() const;
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

 private:
  std::vector<Individual> members_;
};

ParetoArchive update_archive(ParetoArchive archive, std::span<const Individual> candidates);

// Points of the set not dominated by (or equal to an earlier copy of) any
// other point, by pairwise comparison.
std::vector<ObjectiveVector> non_dominated(std::span<const ObjectiveVector> points);

// Exact volume dominated by points and bounded by ref. Points not strictly
// better than ref in every objective contribute nothing.
double hypervolume(std::span<const ObjectiveVector> points, const ObjectiveVector& ref);

// NSGA-II crowding distance; boundary points get +infinity.
std::vector<double> crowding_distance(std::span<const ObjectiveVector> points);

}  // namespace cfgtune
