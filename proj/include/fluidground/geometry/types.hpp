#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace fg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();

  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p, double tolerance = 0) const {
    return (p.array() >= lo.array() - tolerance).all() && (p.array() <= hi.array() + tolerance).all();
  }
  /// Box grown by `fraction` of its extent on every side.
  Box expanded(double fraction) const {
    const Vec3 pad = fraction * extent();
    return {lo - pad, hi + pad};
  }
};

/// Fluid particle set at one time step, plus the static wall samples.
struct ParticleState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  double particle_radius = 0.05;
  std::vector<Vec3> boundary_positions;

  std::size_t size() const { return positions.size(); }
  /// Throws ConfigError when the invariants do not hold.
  void validate() const;
};

/// Row-major flattening helpers between Vec3 lists and [n, 3] buffers.
template <class T>
std::vector<T> flatten(std::span<const Vec3> points) {
  std::vector<T> out;
  out.reserve(points.size() * 3);
  for (const auto& p : points) {
    out.push_back(static_cast<T>(p.x()));
    out.push_back(static_cast<T>(p.y()));
    out.push_back(static_cast<T>(p.z()));
  }
  return out;
}

template <class T>
std::vector<Vec3> unflatten(std::span<const T> values) {
  std::vector<Vec3> out(values.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Vec3(static_cast<double>(values[3 * i]), static_cast<double>(values[3 * i + 1]),
                  static_cast<double>(values[3 * i + 2]));
  }
  return out;
}

}  // namespace fg
