#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cfgtune/archive.hpp"
#include "cfgtune/config_space.hpp"

namespace cfgtune::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline ConfigurationSpace transformer_space() {
  return parse_space(read_file(CFGTUNE_SPACES_DIR "/transformer.json"));
}

inline ConfigurationSpace mini_space() {
  return parse_space(read_file(CFGTUNE_TEST_DATA_DIR "/mini_space.json"));
}

// Model size in bytes, written out term by term independently of the
// library's cost model.
inline std::uint64_t reference_size_bytes(std::uint64_t v, std::uint64_t s, std::uint64_t h,
                                          std::uint64_t i, std::uint64_t l) {
  const std::uint64_t embedding = 4 * v * h + 4 * s * h + 12 * h;
  const std::uint64_t per_layer = 16 * h * h + 36 * h + 8 * i * h + 4 * i;
  const std::uint64_t classifier = 2 * h * h + 4 * h + 2;
  return embedding + per_layer * l + classifier;
}

// O(n^2) non-dominated filter, duplicates collapsed.
inline std::vector<ObjectiveVector> brute_force_front(const std::vector<ObjectiveVector>& pts) {
  std::vector<ObjectiveVector> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < pts.size() && keep; ++j) {
      const auto& a = pts[j];
      const auto& b = pts[i];
      const bool le = a.size_mb <= b.size_mb && a.gflops <= b.gflops &&
                      a.neg_effectiveness <= b.neg_effectiveness;
      const bool lt = a.size_mb < b.size_mb || a.gflops < b.gflops ||
                      a.neg_effectiveness < b.neg_effectiveness;
      if (le && lt) keep = false;
    }
    if (!keep) continue;
    bool dup = false;
    for (const auto& o : out) dup = dup || o == pts[i];
    if (!dup) out.push_back(pts[i]);
  }
  return out;
}

inline std::vector<ObjectiveVector> sorted_copy(std::vector<ObjectiveVector> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Every configuration of a (small) space, in odometer order.
inline std::vector<Configuration> enumerate(const ConfigurationSpace& space) {
  std::vector<Configuration> out;
  std::vector<std::uint64_t> idx(kNumDimensions, 0);
  for (;;) {
    Configuration c;
    for (std::size_t k = 0; k < kNumDimensions; ++k) c.at(k) = space.dimensions()[k].value_at(idx[k]);
    out.push_back(std::move(c));
    std::size_t k = 0;
    while (k < kNumDimensions && ++idx[k] == space.dimensions()[k].size()) idx[k++] = 0;
    if (k == kNumDimensions) break;
  }
  return out;
}

}  // namespace cfgtune::testing
