#pragma once

#include <span>
#include <string_view>

#include "fluidground/geometry/types.hpp"

namespace fg {

enum class DistanceMode {
  Chamfer,       // mean over reference particles of the nearest estimated particle
  IndexMatched,  // mean over i of |estimated_i - reference_i|
};

std::string_view to_string(DistanceMode mode);
DistanceMode distance_mode_from_string(std::string_view name);

double particle_distance(std::span<const Vec3> estimated, std::span<const Vec3> reference,
                         DistanceMode mode = DistanceMode::Chamfer);

/// Grid-accelerated exact nearest-neighbor search over a fixed point set.
class NearestPointIndex {
 public:
  explicit NearestPointIndex(std::span<const Vec3> points);
  /// Distance from x to the closest indexed point.
  double nearest_distance(const Vec3& x) const;

 private:
  std::vector<Vec3> points_;
  Vec3 origin_;
  double cell_ = 1.0;
  int dims_[3] = {1, 1, 1};
  std::vector<std::size_t> cell_start_;  // CSR offsets into order_
  std::vector<std::size_t> order_;
};

}  // namespace fg
