#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fluidground/geometry/types.hpp"

namespace fg::sph {

enum class InitialShape { Cube, Sphere, Cone };

std::string_view to_string(InitialShape shape);
InitialShape shape_from_string(std::string_view name);

/// Scene and solver settings for one oracle benchmark.
struct FluidPreset {
  std::string name = "water_cube";
  InitialShape shape = InitialShape::Cube;
  Vec3 shape_center = Vec3(0, 0, 0.8);
  /// Cube side; sphere diameter; cone base diameter and height (apex up).
  double shape_size = 0.8;
  double viscosity = 0.08;  // dimensionless coefficient; scaled by viscosity_scale into m^2/s
  double rest_density = 1000.0;
  double particle_radius = 0.05;
  Box box{Vec3(-0.8, -0.8, 0.0), Vec3(0.8, 0.8, 1.6)};
  Vec3 gravity = Vec3(0, 0, -9.81);
  double dt = 1.0 / 50.0;  // frame interval
  int steps = 60;          // frames, including the initial one
  int substeps = 20;       // solver steps per frame
  std::uint64_t seed = 1;  // lattice jitter

  // Solver numerics.
  double kernel_radius_factor = 4.0;  // h = factor * r_p
  double sound_speed = 20.0;          // m/s, sets the Tait stiffness
  double viscosity_scale = 0.5;       // coefficient -> kinematic viscosity
  double wall_stiffness = 2.0e4;      // 1/s^2, acceleration per meter of penetration
  double wall_damping = 150.0;        // 1/s, normal velocity damping while penetrating
  double jitter = 0.1;                // lattice jitter bound as a fraction of r_p
  double max_speed = 50.0;            // divergence guard (m/s)

  double spacing() const { return 2.0 * particle_radius; }
  double kernel_radius() const { return kernel_radius_factor * particle_radius; }
  double substep_dt() const { return dt / substeps; }
  double kinematic_viscosity() const { return viscosity_scale * viscosity; }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Built-in desk-scale scenes: water_cube, water_sphere, honey_cone.
std::vector<std::string> preset_names();
FluidPreset preset_by_name(std::string_view name);

/// Implicit test for the preset's initial shape (before jitter).
bool inside_initial_shape(const FluidPreset& preset, const Vec3& p);

}  // namespace fg::sph
