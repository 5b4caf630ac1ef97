#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "fluidground/geometry/types.hpp"

namespace fg {

/// Particles within the search ball around a query point x.
struct NeighborSet {
  std::vector<std::uint32_t> indices;
  std::vector<Vec3> positions;
  std::vector<Vec3> local_vectors;  // p_i - x
  std::vector<double> weights;      // neighbor_weight(l_i, r_s)

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

/// max(1 - (|l| / r_s)^3, 0)
inline double neighbor_weight_from_distance(double distance, double search_radius) {
  const double q = distance / search_radius;
  return q >= 1.0 ? 0.0 : 1.0 - q * q * q;
}

inline double neighbor_weight(const Vec3& local, double search_radius) {
  return neighbor_weight_from_distance(local.norm(), search_radius);
}

/// Uniform-grid hash over a snapshot of positions. Immutable after
/// construction. Queries visit neighbors in a canonical order that depends
/// only on the positions, not on particle indexing.
class SpatialHash {
 public:
  SpatialHash() = default;
  SpatialHash(std::span<const Vec3> positions, double cell_size);

  double cell_size() const { return cell_size_; }
  std::span<const Vec3> positions() const { return positions_; }
  std::size_t cell_count() const { return cells_.size(); }

  /// Calls visit(index, position) for every particle with |p - x| < radius.
  template <class Visit>
  void for_each_in_ball(const Vec3& x, double radius, Visit&& visit) const;

  NeighborSet ball_query(const Vec3& x, double radius) const;

 private:
  using Key = std::uint64_t;
  Key key_of(std::int64_t i, std::int64_t j, std::int64_t k) const;
  std::int64_t coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_size_)); }

  double cell_size_ = 1.0;
  std::vector<Vec3> positions_;
  std::unordered_map<Key, std::vector<std::uint32_t>> cells_;
};

inline SpatialHash::Key SpatialHash::key_of(std::int64_t i, std::int64_t j, std::int64_t k) const {
  constexpr std::int64_t bias = std::int64_t{1} << 20;
  constexpr std::int64_t mask = (std::int64_t{1} << 21) - 1;
  auto pack = [&](std::int64_t v) { return static_cast<Key>(std::clamp(v + bias, std::int64_t{0}, mask)); };
  return (pack(i) << 42) | (pack(j) << 21) | pack(k);
}

template <class Visit>
void SpatialHash::for_each_in_ball(const Vec3& x, double radius, Visit&& visit) const {
  const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_size_));
  const auto ci = coord(x.x()), cj = coord(x.y()), ck = coord(x.z());
  const double r2 = radius * radius;
  for (std::int64_t di = -reach; di <= reach; ++di) {
    for (std::int64_t dj = -reach; dj <= reach; ++dj) {
      for (std::int64_t dk = -reach; dk <= reach; ++dk) {
        auto it = cells_.find(key_of(ci + di, cj + dj, ck + dk));
        if (it == cells_.end()) continue;
        for (auto idx : it->second) {
          const Vec3& p = positions_[idx];
          if ((p - x).squaredNorm() < r2) visit(idx, p);
        }
      }
    }
  }
}

}  // namespace fg
