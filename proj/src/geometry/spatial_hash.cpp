#include "fluidground/geometry/spatial_hash.hpp"

#include <algorithm>
#include <tuple>

#include "fluidground/errors.hpp"

namespace fg {

SpatialHash::SpatialHash(std::span<const Vec3> positions, double cell_size)
    : cell_size_(cell_size), positions_(positions.begin(), positions.end()) {
  if (!(cell_size > 0)) throw UsageError("spatial hash cell size must be positive");
  for (std::uint32_t i = 0; i < positions_.size(); ++i) {
    const auto& p = positions_[i];
    cells_[key_of(coord(p.x()), coord(p.y()), coord(p.z()))].push_back(i);
  }
  for (auto& [key, list] : cells_) {
    std::sort(list.begin(), list.end(), [this](std::uint32_t a, std::uint32_t b) {
      const auto& pa = positions_[a];
      const auto& pb = positions_[b];
      return std::tie(pa.x(), pa.y(), pa.z(), a) < std::tie(pb.x(), pb.y(), pb.z(), b);
    });
  }
}

NeighborSet SpatialHash::ball_query(const Vec3& x, double radius) const {
  NeighborSet out;
  for_each_in_ball(x, radius, [&](std::uint32_t idx, const Vec3& p) {
    const Vec3 l = p - x;
    out.indices.push_back(idx);
    out.positions.push_back(p);
    out.local_vectors.push_back(l);
    out.weights.push_back(neighbor_weight(l, radius));
  });
  return out;
}

}  // namespace fg
