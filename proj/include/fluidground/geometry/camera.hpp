#pragma once

#include <optional>
#include <utility>

#include "fluidground/geometry/types.hpp"

namespace fg {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Pinhole camera. `rotation` maps camera coordinates (x right, y down,
/// z forward) to world coordinates.
struct Camera {
  Vec3 origin = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  double focal = 1.0;  // pixels
  int width = 1;
  int height = 1;

  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
                        int height);
  /// Camera on a circle around `target`: azimuth about +z, elevation above the xy plane.
  static Camera orbit(const Vec3& target, double distance, double azimuth_deg, double elevation_deg,
                      double focal, int width, int height);

  Vec3 forward() const { return rotation.col(2); }
  void validate() const;
};

/// Ray through the center of pixel (u, v); u indexes columns, v rows.
Ray generate_ray(const Camera& camera, int u, int v);

/// Parametric entry/exit distances of a ray through a box, clipped to t >= 0.
std::optional<std::pair<double, double>> intersect_box(const Ray& ray, const Box& box);

}  // namespace fg
