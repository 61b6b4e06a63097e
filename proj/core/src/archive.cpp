#include "cfgtune/archive.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

namespace cfgtune {

bool dominates(const ObjectiveVector& u, const ObjectiveVector& v) {
  const auto a = u.as_array();
  const auto b = v.as_array();
  bool strict = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] > b[k]) return false;
    if (a[k] < b[k]) strict = true;
  }
  return strict;
}

bool ParetoArchive::insert(const Individual& candidate) {
  for (const auto& m : members_) {
    if (m.objectives == candidate.objectives || dominates(m.objectives, candidate.objectives)) {
      return false;
    }
  }
  std::erase_if(members_, [&](const Individual& m) {
    return dominates(candidate.objectives, m.objectives);
  });
  members_.push_back(candidate);
  return true;
}

void ParetoArchive::update(std::span<const Individual> candidates) {
  for (const auto& c : candidates) insert(c);
}

std::vector<ObjectiveVector> ParetoArchive::objectives() const {
  std::vector<ObjectiveVector> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(m.objectives);
  return out;
}

ParetoArchive update_archive(ParetoArchive archive, std::span<const Individual> candidates) {
  archive.update(candidates);
  return archive;
}

std::vector<ObjectiveVector> non_dominated(std::span<const ObjectiveVector> points) {
  std::vector<ObjectiveVector> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < points.size() && keep; ++j) {
      if (j == i) continue;
      if (dominates(points[j], points[i]) || (j < i && points[j] == points[i])) keep = false;
    }
    if (keep) out.push_back(points[i]);
  }
  return out;
}

namespace {

struct Point2 {
  double x;
  double y;
};

// Area dominated by points within [.., ref_x] x [.., ref_y].
double area_2d(std::vector<Point2> pts, double ref_x, double ref_y) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  double area = 0.0;
  double floor_y = ref_y;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].y >= floor_y) continue;
    // Horizontal band between this step and the previous one.
    area += (ref_x - pts[k].x) * (floor_y - pts[k].y);
    floor_y = pts[k].y;
  }
  return area;
}

}  // namespace

double hypervolume(std::span<const ObjectiveVector> points, const ObjectiveVector& ref) {
  std::vector<ObjectiveVector> inside;
  for (const auto& p : points) {
    if (p.size_mb < ref.size_mb && p.gflops < ref.gflops &&
        p.neg_effectiveness < ref.neg_effectiveness) {
      inside.push_back(p);
    }
  }
  // Dominated points and input order must not affect the summation, so the
  // result is a function of the front alone.
  inside = non_dominated(inside);
  std::sort(inside.begin(), inside.end(), [](const ObjectiveVector& a, const ObjectiveVector& b) {
    return std::tuple(a.neg_effectiveness, a.size_mb, a.gflops) <
           std::tuple(b.neg_effectiveness, b.size_mb, b.gflops);
  });
  double volume = 0.0;
  std::vector<Point2> slab;
  for (std::size_t k = 0; k < inside.size(); ++k) {
    slab.push_back({inside[k].size_mb, inside[k].gflops});
    const double z_next =
        k + 1 < inside.size() ? inside[k + 1].neg_effectiveness : ref.neg_effectiveness;
    const double depth = z_next - inside[k].neg_effectiveness;
    if (depth > 0.0) volume += depth * area_2d(slab, ref.size_mb, ref.gflops);
  }
  return volume;
}

std::vector<double> crowding_distance(std::span<const ObjectiveVector> points) {
  const std::size_t n = points.size();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < 3; ++m) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return points[a].as_array()[m] < points[b].as_array()[m];
    });
    const double lo = points[order.front()].as_array()[m];
    const double hi = points[order.back()].as_array()[m];
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    if (hi <= lo) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (points[order[k + 1]].as_array()[m] - points[order[k - 1]].as_array()[m]) /
                        (hi - lo);
    }
  }
  return dist;
}

}  // namespace cfgtune
