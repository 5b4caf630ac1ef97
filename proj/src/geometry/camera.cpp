#include "fluidground/geometry/camera.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fluidground/errors.hpp"

namespace fg {

void ParticleState::validate() const {
  if (positions.empty()) throw ConfigError("particle state needs at least one fluid particle");
  if (velocities.size() != positions.size()) throw ConfigError("positions and velocities differ in length");
  if (!(particle_radius > 0)) throw ConfigError("particle radius must be positive");
  for (const auto& p : positions)
    if (!p.allFinite()) throw ConfigError("non-finite particle position");
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
                       int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) throw ConfigError("camera up vector is parallel to the view direction");
  right.normalize();
  const Vec3 down = forward.cross(right);
  Camera cam;
  cam.origin = eye;
  cam.rotation.col(0) = right;
  cam.rotation.col(1) = down;
  cam.rotation.col(2) = forward;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  cam.validate();
  return cam;
}

Camera Camera::orbit(const Vec3& target, double distance, double azimuth_deg, double elevation_deg,
                     double focal, int width, int height) {
  const double az = azimuth_deg * std::numbers::pi / 180.0;
  const double el = elevation_deg * std::numbers::pi / 180.0;
  const Vec3 offset(distance * std::cos(el) * std::cos(az), distance * std::cos(el) * std::sin(az),
                    distance * std::sin(el));
  return look_at(target + offset, target, Vec3::UnitZ(), focal, width, height);
}

void Camera::validate() const {
  if (!(focal > 0)) throw ConfigError("camera focal length must be positive");
  if (width < 1 || height < 1) throw ConfigError("camera image size must be positive");
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ConfigError("camera rotation is not orthonormal");
  }
}

Ray generate_ray(const Camera& camera, int u, int v) {
  if (u < 0 || v < 0 || u >= camera.width || v >= camera.height) {
    throw UsageError("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") outside the image");
  }
  const double x = (u + 0.5 - 0.5 * camera.width) / camera.focal;
  const double y = (v + 0.5 - 0.5 * camera.height) / camera.focal;
  const Vec3 dir = camera.rotation * Vec3(x, y, 1.0);
  return {camera.origin, dir.normalized()};
}

std::optional<std::pair<double, double>> intersect_box(const Ray& ray, const Box& box) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double d = ray.direction[a];
    if (std::abs(d) < 1e-300) {
      if (ray.origin[a] < box.lo[a] || ray.origin[a] > box.hi[a]) return std::nullopt;
      continue;
    }
    double ta = (box.lo[a] - ray.origin[a]) / d;
    double tb = (box.hi[a] - ray.origin[a]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

}  // namespace fg
