#include "cfgtune/pruner.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>

#include "cfgtune/error.hpp"
#include "json_io.hpp"

namespace cfgtune {

namespace {

std::int64_t integer_entry(const Dimension& dim, std::uint64_t index) {
  const auto v = dim.value_at(index);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return static_cast<std::int64_t>(std::llround(std::get<double>(v)));
}

void set_shape(ModelShape& shape, Dim d, std::int64_t value) {
  switch (d) {
    case Dim::vocab_size: shape.vocab_size = value; break;
    case Dim::num_hidden_layers: shape.num_layers = value; break;
    case Dim::hidden_size: shape.hidden_size = value; break;
    case Dim::intermediate_size: shape.intermediate_size = value; break;
    case Dim::max_sequence_length: shape.max_sequence_length = value; break;
    default: break;
  }
}

bool is_size_dim(Dim d) {
  return std::find(kSizeDims.begin(), kSizeDims.end(), d) != kSizeDims.end();
}

bool corner_fits(const ConfigurationSpace& space, Dim d, std::uint64_t index,
                 const SizeConstraint& constraint) {
  ModelShape shape = min_corner(space);
  set_shape(shape, d, integer_entry(space.dimension(d), index));
  return constraint.admits(model_size(shape).total_bytes());
}

// Largest feasible entry index of each size dimension within one subspace.
using Frontier = std::array<std::optional<std::int64_t>, kSizeDims.size()>;

Frontier solve_subspace(const Subspace& sub, const SizeConstraint& constraint) {
  Frontier out;
  for (std::size_t k = 0; k < kSizeDims.size(); ++k) {
    const Dim d = kSizeDims[k];
    const auto& dim = sub.dimension(d);
    if (!corner_fits(sub, d, 0, constraint)) continue;
    // Feasibility is monotone in the entry index: binary search the edge.
    std::uint64_t lo = 0;
    std::uint64_t hi = dim.size() - 1;
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo + 1) / 2;
      if (corner_fits(sub, d, mid, constraint)) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    out[k] = integer_entry(dim, lo);
  }
  return out;
}

}  // namespace

ModelShape min_corner(const ConfigurationSpace& space) {
  ModelShape shape;
  for (Dim d : kSizeDims) set_shape(shape, d, integer_entry(space.dimension(d), 0));
  return shape;
}

Dim partition_dimension(const ConfigurationSpace& space) {
  Dim best = kSizeDims.front();
  for (Dim d : kSizeDims) {
    if (space.dimension(d).size() > space.dimension(best).size()) best = d;
  }
  return best;
}

std::vector<Subspace> partition(const ConfigurationSpace& space, std::size_t n) {
  if (n == 0) throw ValidationError("partition count must be >= 1");
  const Dim d = partition_dimension(space);
  const auto& dim = space.dimension(d);
  const std::uint64_t total = dim.size();
  const std::uint64_t parts = std::min<std::uint64_t>(n, total);

  std::vector<Subspace> out;
  out.reserve(parts);
  std::uint64_t first = 0;
  for (std::uint64_t p = 0; p < parts; ++p) {
    // The first (total % parts) chunks get one extra entry.
    const std::uint64_t len = total / parts + (p < total % parts ? 1 : 0);
    out.push_back(space.with_dimension(d, dim.slice(first, first + len - 1)));
    first += len;
  }
  return out;
}

bool is_feasible_value(const ConfigurationSpace& space, Dim dim, const Value& value,
                       const SizeConstraint& constraint) {
  const auto index = space.dimension(dim).index_of(value);
  if (!index) {
    throw ValidationError("value " + to_string(value) + " is outside dimension '" +
                          std::string(name_of(dim)) + "'");
  }
  if (!is_size_dim(dim)) return constraint.admits(model_size(min_corner(space)).total_bytes());
  return corner_fits(space, dim, *index, constraint);
}

bool is_feasible_value(const ConfigurationSpace& space, std::string_view dim_name,
                       const Value& value, const SizeConstraint& constraint) {
  const auto dim = dim_from_name(dim_name);
  if (!dim) throw ValidationError("unknown dimension '" + std::string(dim_name) + "'");
  return is_feasible_value(space, *dim, value, constraint);
}

ConfigurationSpace prune(const ConfigurationSpace& space, const SizeConstraint& constraint,
                         std::size_t partitions) {
  if (!constraint.admits(model_size(min_corner(space)).total_bytes())) {
    throw InfeasibleError("no configuration fits the size budget of " +
                          std::to_string(constraint.budget_mb) + " MB");
  }
  const auto subspaces = partition(space, partitions);
  std::vector<Frontier> results(subspaces.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < subspaces.size(); k = next++) {
      results[k] = solve_subspace(subspaces[k], constraint);
    }
  };
  const std::size_t n_threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, subspaces.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  // Merge in subspace order. A feasible set per dimension is a prefix, so
  // along the split dimension no chunk may be feasible after an infeasible one.
  const Dim split = partition_dimension(space);
  const auto split_slot = static_cast<std::size_t>(
      std::find(kSizeDims.begin(), kSizeDims.end(), split) - kSizeDims.begin());
  Frontier merged;
  bool gap = false;
  for (const auto& r : results) {
    if (!r[split_slot]) {
      gap = true;
    } else if (gap) {
      throw std::logic_error("pruner: feasible entries of '" + std::string(name_of(split)) +
                             "' are not a prefix");
    }
    for (std::size_t k = 0; k < kSizeDims.size(); ++k) {
      if (r[k] && (!merged[k] || *r[k] > *merged[k])) merged[k] = r[k];
    }
  }

  ConfigurationSpace out = space;
  for (std::size_t k = 0; k < kSizeDims.size(); ++k) {
    const Dim d = kSizeDims[k];
    const auto& dim = space.dimension(d);
    const Value edge = dim.kind() == DimensionKind::integer_range
                           ? Value{*merged[k]}
                           : Value{static_cast<double>(*merged[k])};
    out = out.with_dimension(d, dim.slice(0, *dim.index_of(edge)));
  }
  return out;
}

PruneReport make_prune_report(const ConfigurationSpace& original, const ConfigurationSpace& pruned,
                              const SizeConstraint& constraint, std::size_t partitions) {
  PruneReport report;
  report.budget_mb = constraint.budget_mb;
  report.partitions = partitions;
  report.original_cardinality = original.cardinality();
  report.pruned_cardinality = pruned.cardinality();
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const auto& a = original.dimensions()[k];
    const auto& b = pruned.dimensions()[k];
    report.dimensions.push_back({a.name(), to_string(a.value_at(0)),
                                 to_string(a.value_at(a.size() - 1)), to_string(b.value_at(0)),
                                 to_string(b.value_at(b.size() - 1)), a.size(), b.size()});
  }
  return report;
}

std::string prune_report_json(const PruneReport& report) {
  detail::ordered_json doc;
  doc["budget_mb"] = report.budget_mb;
  doc["partitions"] = report.partitions;
  doc["original_cardinality"] = to_string(report.original_cardinality);
  doc["pruned_cardinality"] = to_string(report.pruned_cardinality);
  doc["cardinality_ratio"] = report.cardinality_ratio();
  auto& dims = doc["dimensions"] = detail::ordered_json::array();
  for (const auto& d : report.dimensions) {
    detail::ordered_json row;
    row["name"] = d.name;
    row["original"] = {d.original_min, d.original_max};
    row["retained"] = {d.retained_min, d.retained_max};
    row["original_size"] = d.original_size;
    row["retained_size"] = d.retained_size;
    dims.push_back(std::move(row));
  }
  return doc.dump(2);
}

}  // namespace cfgtune
