#include "fluidground/geometry/particle_distance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "fluidground/errors.hpp"

namespace fg {

std::string_view to_string(DistanceMode mode) {
  return mode == DistanceMode::Chamfer ? "chamfer" : "index_matched";
}

DistanceMode distance_mode_from_string(std::string_view name) {
  if (name == "chamfer") return DistanceMode::Chamfer;
  if (name == "index_matched") return DistanceMode::IndexMatched;
  throw ConfigError("unknown distance mode '" + std::string(name) + "'");
}

NearestPointIndex::NearestPointIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) throw UsageError("nearest-point index needs at least one point");
  Vec3 lo = points_[0], hi = points_[0];
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = (hi - lo).cwiseMax(1e-9);
  // Roughly one point per cell, measured in the dimension the set actually
  // fills: the coarsest of the 1-, 2- and 3-D spacing estimates, so planar
  // and collinear sets do not get needle-fine cells.
  Vec3 sorted = extent;
  std::sort(sorted.data(), sorted.data() + 3, std::greater<>());
  const double n = static_cast<double>(points_.size());
  cell_ = std::max({sorted[0] / n, std::sqrt(sorted[0] * sorted[1] / n), std::cbrt(extent.prod() / n),
                    1e-6 * extent.maxCoeff()});
  origin_ = lo;
  for (int a = 0; a < 3; ++a) dims_[a] = std::clamp(static_cast<int>(extent[a] / cell_) + 1, 1, 1 << 10);
  cell_ = std::max({cell_, extent[0] / dims_[0], extent[1] / dims_[1], extent[2] / dims_[2]}) * (1 + 1e-9);

  const std::size_t ncell = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::size_t> cell_of(points_.size());
  cell_start_.assign(ncell + 1, 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    int c[3];
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp(static_cast<int>((points_[i][a] - origin_[a]) / cell_), 0, dims_[a] - 1);
    }
    cell_of[i] = (static_cast<std::size_t>(c[0]) * dims_[1] + c[1]) * dims_[2] + c[2];
    ++cell_start_[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < ncell; ++c) cell_start_[c + 1] += cell_start_[c];
  order_.resize(points_.size());
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) order_[fill[cell_of[i]]++] = i;
}

double NearestPointIndex::nearest_distance(const Vec3& x) const {
  int q[3];
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((x[a] - origin_[a]) / cell_);
    q[a] = static_cast<int>(std::clamp(f, -1.0, static_cast<double>(dims_[a])));
  }
  double best2 = std::numeric_limits<double>::infinity();
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]}) + 1;
  auto visit = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= dims_[0] || j >= dims_[1] || k >= dims_[2]) return;
    const std::size_t c = (static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k;
    for (std::size_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
      best2 = std::min(best2, (points_[order_[s]] - x).squaredNorm());
    }
  };
  for (int r = 0; r <= max_ring; ++r) {
    for (int di = -r; di <= r; ++di) {
      for (int dj = -r; dj <= r; ++dj) {
        const bool face = std::abs(di) == r || std::abs(dj) == r;
        if (face) {
          for (int dk = -r; dk <= r; ++dk) visit(q[0] + di, q[1] + dj, q[2] + dk);
        } else {
          visit(q[0] + di, q[1] + dj, q[2] - r);
          if (r > 0) visit(q[0] + di, q[1] + dj, q[2] + r);
        }
      }
    }
    // Any point outside rings 0..r lies at least r cells away along some axis.
    const double bound = r * cell_;
    if (best2 <= bound * bound) break;
  }
  return std::sqrt(best2);
}

double particle_distance(std::span<const Vec3> estimated, std::span<const Vec3> reference, DistanceMode mode) {
  if (estimated.empty() || reference.empty()) throw UsageError("particle_distance needs non-empty sets");
  double total = 0.0;
  if (mode == DistanceMode::IndexMatched) {
    if (estimated.size() != reference.size()) {
      throw DimensionError("index-matched distance needs equal particle counts");
    }
    for (std::size_t i = 0; i < reference.size(); ++i) total += (estimated[i] - reference[i]).norm();
  } else {
    const NearestPointIndex index(estimated);
    for (const auto& p : reference) total += index.nearest_distance(p);
  }
  return total / static_cast<double>(reference.size());
}

}  // namespace fg
