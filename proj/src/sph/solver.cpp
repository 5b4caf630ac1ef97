#include "fluidground/sph/solver.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fluidground/errors.hpp"
#include "fluidground/geometry/spatial_hash.hpp"

namespace fg::sph {

namespace {

constexpr double kPi = std::numbers::pi;

struct Kernels {
  double h, h2, poly6, spiky_grad, visc_lap;
  explicit Kernels(double support)
      : h(support),
        h2(support * support),
        poly6(315.0 / (64.0 * kPi * std::pow(support, 9))),
        spiky_grad(-45.0 / (kPi * std::pow(support, 6))),
        visc_lap(45.0 / (kPi * std::pow(support, 6))) {}

  double w(double r2) const {
    const double q = h2 - r2;
    return q > 0 ? poly6 * q * q * q : 0.0;
  }
  /// Gradient of the spiky kernel with respect to x_i for r = x_i - x_j.
  Vec3 grad(const Vec3& r, double len) const {
    if (len <= 0 || len >= h) return Vec3::Zero();
    const double q = h - len;
    return (spiky_grad * q * q / len) * r;
  }
  double laplacian(double len) const { return len < h ? visc_lap * (h - len) : 0.0; }
};

}  // namespace

std::vector<Vec3> shape_lattice(const FluidPreset& preset) {
  const double s = preset.spacing();
  const int n = std::max(1, static_cast<int>(std::floor(preset.shape_size / s + 1e-9)));
  const Vec3 start = preset.shape_center - Vec3::Constant(0.5 * (n - 1) * s);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out.push_back(start + s * Vec3(i, j, k));
  return out;
}

std::vector<Vec3> sample_box_walls(const Box& box, double spacing) {
  int counts[3];
  for (int a = 0; a < 3; ++a) counts[a] = std::max(1, static_cast<int>(std::round(box.extent()[a] / spacing)));
  std::vector<Vec3> out;
  for (int i = 0; i <= counts[0]; ++i)
    for (int j = 0; j <= counts[1]; ++j)
      for (int k = 0; k <= counts[2]; ++k) {
        const bool on_wall = i == 0 || j == 0 || k == 0 || i == counts[0] || j == counts[1] || k == counts[2];
        if (!on_wall) continue;
        const Vec3 f(double(i) / counts[0], double(j) / counts[1], double(k) / counts[2]);
        out.push_back(box.lo + f.cwiseProduct(box.extent()));
      }
  return out;
}

ParticleState seed_particles(const FluidPreset& preset) {
  preset.validate();
  std::mt19937_64 rng(preset.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double bound = preset.jitter * preset.particle_radius;
  ParticleState state;
  state.particle_radius = preset.particle_radius;
  for (const auto& p : shape_lattice(preset)) {
    if (!inside_initial_shape(preset, p)) continue;
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    const double len = bound * std::cbrt(unit(rng));
    state.positions.push_back(p + len * dir);
  }
  if (state.positions.empty()) throw ConfigError("preset: initial shape contains no lattice points");
  state.velocities.assign(state.positions.size(), Vec3::Zero());
  state.boundary_positions = sample_box_walls(preset.box, preset.spacing());
  return state;
}

double particle_mass(const FluidPreset& preset) {
  const Kernels k(preset.kernel_radius());
  const double s = preset.spacing();
  const int reach = static_cast<int>(std::ceil(k.h / s));
  double sum = 0;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int l = -reach; l <= reach; ++l) sum += k.w(s * s * (i * i + j * j + l * l));
  return preset.rest_density / sum;
}

SphForces compute_forces(const ParticleState& state, const FluidPreset& preset) {
  const Kernels k(preset.kernel_radius());
  const std::size_t n = state.size();
  SphForces f;
  f.mass = particle_mass(preset);
  const double m = f.mass;
  f.density.assign(n, 0.0);
  f.pressure.assign(n, 0.0);
  f.pressure_force.assign(n, Vec3::Zero());
  f.viscosity_force.assign(n, Vec3::Zero());
  f.wall_force.assign(n, Vec3::Zero());
  f.gravity_force.assign(n, m * preset.gravity);

  const SpatialHash hash(state.positions, k.h);
  const double stiffness = preset.rest_density * preset.sound_speed * preset.sound_speed / 7.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& xi = state.positions[i];
    double rho = 0;
    hash.for_each_in_ball(xi, k.h, [&](std::uint32_t, const Vec3& xj) { rho += m * k.w((xi - xj).squaredNorm()); });
    f.density[i] = rho;
    // Tait equation; tension is clamped to avoid surface clumping.
    f.pressure[i] = std::max(0.0, stiffness * (std::pow(rho / preset.rest_density, 7) - 1.0));
  }

  const double nu = preset.kinematic_viscosity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& xi = state.positions[i];
    const double pi_term = f.pressure[i] / (f.density[i] * f.density[i]);
    Vec3 fp = Vec3::Zero(), fv = Vec3::Zero();
    hash.for_each_in_ball(xi, k.h, [&](std::uint32_t j, const Vec3& xj) {
      if (j == i) return;
      const Vec3 r = xi - xj;
      const double len = r.norm();
      const double pj_term = f.pressure[j] / (f.density[j] * f.density[j]);
      fp -= m * m * (pi_term + pj_term) * k.grad(r, len);
      fv += nu * m * m / f.density[j] * (state.velocities[j] - state.velocities[i]) * k.laplacian(len);
    });
    f.pressure_force[i] = fp;
    f.viscosity_force[i] = fv;

    Vec3 wall = Vec3::Zero();
    const double rp = state.particle_radius;
    for (int a = 0; a < 3; ++a) {
      const double below = preset.box.lo[a] + rp - xi[a];
      if (below > 0) wall[a] += preset.wall_stiffness * below - preset.wall_damping * std::min(0.0, state.velocities[i][a]);
      const double above = xi[a] - (preset.box.hi[a] - rp);
      if (above > 0) wall[a] -= preset.wall_stiffness * above + preset.wall_damping * std::max(0.0, state.velocities[i][a]);
    }
    f.wall_force[i] = m * wall;
  }
  return f;
}

ParticleState sph_step(const ParticleState& state, const FluidPreset& preset) {
  const SphForces f = compute_forces(state, preset);
  const double dt = preset.substep_dt();
  ParticleState next = state;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Vec3 interaction = f.pressure_force[i] + f.viscosity_force[i] + f.wall_force[i];
    Vec3 v = state.velocities[i] + dt * (preset.gravity + interaction / f.mass);
    Vec3 x = state.positions[i] + dt * v;
    if (!x.allFinite() || !v.allFinite() || v.norm() > preset.max_speed) {
      throw DivergenceError("oracle simulation diverged at particle " + std::to_string(i) + " (speed " +
                            std::to_string(v.norm()) + " m/s)");
    }
    for (int a = 0; a < 3; ++a) {
      if (x[a] < preset.box.lo[a]) {
        x[a] = preset.box.lo[a];
        v[a] = std::max(0.0, v[a]);
      } else if (x[a] > preset.box.hi[a]) {
        x[a] = preset.box.hi[a];
        v[a] = std::min(0.0, v[a]);
      }
    }
    next.positions[i] = x;
    next.velocities[i] = v;
  }
  return next;
}

ParticleState advance_frame(const ParticleState& state, const FluidPreset& preset) {
  ParticleState s = state;
  for (int k = 0; k < preset.substeps; ++k) s = sph_step(s, preset);
  return s;
}

Trajectory simulate(const FluidPreset& preset, const ParticleState& initial, int frames) {
  Trajectory traj;
  traj.particle_radius = initial.particle_radius;
  traj.box = preset.box;
  traj.boundary_positions = initial.boundary_positions;
  ParticleState s = initial;
  traj.append(s);
  for (int t = 1; t < frames; ++t) {
    s = advance_frame(s, preset);
    traj.append(s);
  }
  return traj;
}

Trajectory simulate(const FluidPreset& preset) { return simulate(preset, seed_particles(preset), preset.steps); }

double kinetic_energy(const ParticleState& state, double mass) {
  double e = 0;
  for (const auto& v : state.velocities) e += 0.5 * mass * v.squaredNorm();
  return e;
}

}  // namespace fg::sph
