#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "fluidground/geometry/types.hpp"

namespace fg {

/// A simulated sequence: T frames of fluid positions/velocities plus the
/// static boundary samples shared by every frame.
struct Trajectory {
  double particle_radius = 0.05;
  Box box;
  std::vector<Vec3> boundary_positions;
  std::vector<std::vector<Vec3>> positions;   // [T][N]
  std::vector<std::vector<Vec3>> velocities;  // [T][N]

  std::size_t frame_count() const { return positions.size(); }
  std::size_t particle_count() const { return positions.empty() ? 0 : positions.front().size(); }
  ParticleState state(std::size_t frame) const;
  void append(const ParticleState& state);
};

inline constexpr char kTrajectoryMagic[8] = {'F', 'G', 'T', 'R', 'A', 'J', '\0', '\0'};
inline constexpr std::uint32_t kTrajectoryVersion = 1;

/// Binary layout (little-endian): magic[8], u32 version, u64 N, u64 M, u64 T,
/// f32 r_p, f32 box lo[3], f32 box hi[3], M×3 f32 boundary, then per frame
/// N×3 f32 positions followed by N×3 f32 velocities.
void write_trajectory(std::ostream& out, const Trajectory& trajectory);
Trajectory read_trajectory(std::istream& in);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory load_trajectory(const std::filesystem::path& path);

/// One "x y z vx vy vz" line per fluid particle.
void write_frame_text(std::ostream& out, const Trajectory& trajectory, std::size_t frame);

}  // namespace fg
