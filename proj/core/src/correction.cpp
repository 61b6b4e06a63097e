#include "cfgtune/correction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "cfgtune/error.hpp"
#include "cfgtune/rng.hpp"

namespace cfgtune {

namespace {

constexpr int kMaxResampleAttempts = 100;

// Nearest in-domain value for anything the domain does not contain.
Value snap(const Value& value, const Dimension& dim) {
  if (dim.contains(value)) return value;
  if (dim.kind() == DimensionKind::categorical) return dim.value_at(0);
  double code = dim.min_code();
  if (const auto* i = std::get_if<std::int64_t>(&value)) code = static_cast<double>(*i);
  if (const auto* x = std::get_if<double>(&value)) code = *x;
  return dim.from_code(code);
}

std::int64_t integer_at(const Dimension& dim, std::uint64_t index) {
  const auto v = dim.value_at(index);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return static_cast<std::int64_t>(std::llround(std::get<double>(v)));
}

std::uint64_t index_in(const Configuration& c, Dim d, const ConfigurationSpace& space) {
  return *space.dimension(d).index_of(c[d]);
}

std::int64_t pick(const std::vector<std::int64_t>& values, Rng& rng) {
  return values[rng.uniform_index(values.size())];
}

void fix_divisibility(Configuration& c, const ConfigurationSpace& space, Rng& rng) {
  const auto& hidden = space.dimension(Dim::hidden_size);
  const auto& heads = space.dimension(Dim::num_attention_heads);
  const auto h = c.hidden_size();
  const auto a = c.num_heads();
  if (a > 0 && h % a == 0) return;

  if (auto divisors = head_divisors(h, heads); !divisors.empty()) {
    c.set_integer(Dim::num_attention_heads, pick(divisors, rng), space);
    return;
  }
  for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
    const auto candidate = integer_at(hidden, rng.uniform_index(hidden.size()));
    if (auto divisors = head_divisors(candidate, heads); !divisors.empty()) {
      c.set_integer(Dim::hidden_size, candidate, space);
      c.set_integer(Dim::num_attention_heads, pick(divisors, rng), space);
      return;
    }
  }
  // Deterministic clamp: smallest hidden size admitting a head count, with
  // the largest such head count.
  for (std::uint64_t k = 0; k < hidden.size(); ++k) {
    const auto candidate = integer_at(hidden, k);
    if (auto divisors = head_divisors(candidate, heads); !divisors.empty()) {
      c.set_integer(Dim::hidden_size, candidate, space);
      c.set_integer(Dim::num_attention_heads, divisors.back(), space);
      return;
    }
  }
  throw InfeasibleError("no hidden_size in range is divisible by any num_attention_heads in range");
}

// Shrinks one size dimension to a uniformly drawn smaller entry. Returns
// false when no dimension can shrink.
bool shrink_once(Configuration& c, const ConfigurationSpace& space, Rng& rng) {
  std::vector<Dim> shrinkable;
  for (Dim d : kSizeDims) {
    if (index_in(c, d, space) == 0) continue;
    if (d == Dim::hidden_size) {
      // Needs a smaller hidden size that still admits a head count.
      const auto& hidden = space.dimension(d);
      const auto& heads = space.dimension(Dim::num_attention_heads);
      const auto idx = index_in(c, d, space);
      bool any = false;
      for (std::uint64_t k = 0; k < idx && !any; ++k) {
        any = !head_divisors(integer_at(hidden, k), heads).empty();
      }
      if (!any) continue;
    }
    shrinkable.push_back(d);
  }
  if (shrinkable.empty()) return false;

  const Dim d = shrinkable[rng.uniform_index(shrinkable.size())];
  const auto& dim = space.dimension(d);
  const auto idx = index_in(c, d, space);
  if (d != Dim::hidden_size) {
    c[d] = dim.value_at(rng.uniform_index(idx));
    return true;
  }
  const auto& heads = space.dimension(Dim::num_attention_heads);
  for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
    const auto candidate = integer_at(dim, rng.uniform_index(idx));
    if (!head_divisors(candidate, heads).empty()) {
      c.set_integer(d, candidate, space);
      fix_divisibility(c, space, rng);
      return true;
    }
  }
  for (std::uint64_t k = idx; k-- > 0;) {
    const auto candidate = integer_at(dim, k);
    if (!head_divisors(candidate, heads).empty()) {
      c.set_integer(d, candidate, space);
      fix_divisibility(c, space, rng);
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::int64_t> head_divisors(std::int64_t hidden_size, const Dimension& heads) {
  std::vector<std::int64_t> out;
  if (hidden_size <= 0) return out;
  for (std::int64_t d = 1; d * d <= hidden_size; ++d) {
    if (hidden_size % d != 0) continue;
    for (std::int64_t q : {d, hidden_size / d}) {
      const Value v = heads.kind() == DimensionKind::integer_range ? Value{q}
                                                                   : Value{static_cast<double>(q)};
      if (heads.contains(v) && (out.empty() || out.back() != q)) out.push_back(q);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Configuration correct(const Configuration& config, const ConfigurationSpace& space, Rng& rng,
                      const std::optional<SizeConstraint>& budget) {
  Configuration c = config;
  for (std::size_t k = 0; k < kNumDimensions; ++k) c.at(k) = snap(c.at(k), space.dimensions()[k]);
  fix_divisibility(c, space, rng);
  if (!budget) return c;

  while (!budget->admits(c)) {
    if (!shrink_once(c, space, rng)) {
      throw InfeasibleError("no configuration fits the " + std::to_string(budget->budget_mb) +
                            " MB budget");
    }
  }
  return c;
}

}  // namespace cfgtune
