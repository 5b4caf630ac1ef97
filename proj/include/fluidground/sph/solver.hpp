#pragma once

#include <vector>

#include "fluidground/geometry/trajectory.hpp"
#include "fluidground/geometry/types.hpp"
#include "fluidground/sph/preset.hpp"

namespace fg::sph {

/// Jittered lattice at spacing 2 r_p filling the initial shape, zero
/// velocities, and one layer of wall samples at the same spacing.
ParticleState seed_particles(const FluidPreset& preset);

/// Lattice cell centers covering the shape's bounding cube, before filtering and jitter.
std::vector<Vec3> shape_lattice(const FluidPreset& preset);

/// One layer of static samples on all six box faces.
std::vector<Vec3> sample_box_walls(const Box& box, double spacing);

/// Per-particle quantities of one solver evaluation. Forces are in newtons.
struct SphForces {
  double mass = 0;
  std::vector<double> density;
  std::vector<double> pressure;
  std::vector<Vec3> pressure_force;
  std::vector<Vec3> viscosity_force;
  std::vector<Vec3> wall_force;
  std::vector<Vec3> gravity_force;

  Vec3 total(std::size_t i) const {
    return pressure_force[i] + viscosity_force[i] + wall_force[i] + gravity_force[i];
  }
};

/// Particle mass for which an interior lattice reaches the rest density.
double particle_mass(const FluidPreset& preset);

SphForces compute_forces(const ParticleState& state, const FluidPreset& preset);

/// One solver step of size preset.substep_dt(): symplectic Euler, then clamp into the box.
/// Throws DivergenceError on non-finite values or speeds above preset.max_speed.
ParticleState sph_step(const ParticleState& state, const FluidPreset& preset);

/// Advances one frame (preset.substeps solver steps).
ParticleState advance_frame(const ParticleState& state, const FluidPreset& preset);

/// Seeds and simulates preset.steps frames (frame 0 is the seeded state).
Trajectory simulate(const FluidPreset& preset);
Trajectory simulate(const FluidPreset& preset, const ParticleState& initial, int frames);

double kinetic_energy(const ParticleState& state, double mass);

}  // namespace fg::sph
