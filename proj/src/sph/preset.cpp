#include "fluidground/sph/preset.hpp"

#include <cmath>

#include "fluidground/errors.hpp"

namespace fg::sph {

std::string_view to_string(InitialShape shape) {
  switch (shape) {
    case InitialShape::Cube: return "cube";
    case InitialShape::Sphere: return "sphere";
    case InitialShape::Cone: return "cone";
  }
  return "cube";
}

InitialShape shape_from_string(std::string_view name) {
  if (name == "cube") return InitialShape::Cube;
  if (name == "sphere") return InitialShape::Sphere;
  if (name == "cone") return InitialShape::Cone;
  throw ConfigError("unknown initial shape '" + std::string(name) + "' (expected cube, sphere or cone)");
}

void FluidPreset::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("preset: ") + what);
  };
  require(viscosity >= 0, "viscosity must be >= 0");
  require(rest_density > 0, "rest_density must be > 0");
  require(particle_radius > 0, "particle_radius must be > 0");
  require(dt > 0, "dt must be > 0");
  require(steps >= 1, "steps must be >= 1");
  require(substeps >= 1, "substeps must be >= 1");
  require(shape_size > 0, "shape_size must be > 0");
  require((box.hi.array() > box.lo.array()).all(), "box hi must exceed lo on every axis");
  require(kernel_radius_factor > 0 && sound_speed > 0 && viscosity_scale >= 0, "solver numerics must be positive");
  require(wall_stiffness > 0 && wall_damping >= 0, "wall parameters must be positive");
  require(jitter >= 0 && jitter < 1, "jitter must lie in [0, 1)");
  require(gravity.allFinite() && shape_center.allFinite(), "gravity and shape_center must be finite");
  const Vec3 half = Vec3::Constant(0.5 * shape_size);
  const Box shape_box{shape_center - half, shape_center + half};
  if (!box.contains(shape_box.lo, 1e-12) || !box.contains(shape_box.hi, 1e-12)) {
    throw ConfigError("preset: initial " + std::string(to_string(shape)) + " does not fit inside the box");
  }
}

std::vector<std::string> preset_names() { return {"water_cube", "water_sphere", "honey_cone"}; }

FluidPreset preset_by_name(std::string_view name) {
  FluidPreset p;
  p.name = std::string(name);
  if (name == "water_cube") {
    p.shape = InitialShape::Cube;
    p.shape_center = Vec3(0, 0, 0.8);
    p.shape_size = 0.8;
  } else if (name == "water_sphere") {
    p.shape = InitialShape::Sphere;
    p.shape_center = Vec3(0, 0, 0.9);
    p.shape_size = 1.0;
  } else if (name == "honey_cone") {
    p.shape = InitialShape::Cone;
    p.shape_center = Vec3(0, 0, 0.8);
    p.shape_size = 1.3;
    p.viscosity = 0.8;
    p.rest_density = 1420.0;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected water_cube, water_sphere or honey_cone)");
  }
  return p;
}

bool inside_initial_shape(const FluidPreset& preset, const Vec3& p) {
  const double half = 0.5 * preset.shape_size;
  const Vec3 d = p - preset.shape_center;
  switch (preset.shape) {
    case InitialShape::Cube:
      return d.cwiseAbs().maxCoeff() <= half;
    case InitialShape::Sphere:
      return d.norm() <= half;
    case InitialShape::Cone: {
      // Base disc of radius `half` at the bottom face, apex at the top face.
      const double h = d.z() + half;
      if (h < 0 || h > preset.shape_size) return false;
      const double radius = half * (1.0 - h / preset.shape_size);
      return std::hypot(d.x(), d.y()) <= radius;
    }
  }
  return false;
}

}  // namespace fg::sph
