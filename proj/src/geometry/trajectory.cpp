#include "fluidground/geometry/trajectory.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

#include "fluidground/errors.hpp"
#include "fluidground/io/binary.hpp"

namespace fg {

namespace {

void put_points(std::ostream& out, const std::vector<Vec3>& points) {
  for (const auto& p : points)
    for (int a = 0; a < 3; ++a) io::put<float>(out, static_cast<float>(p[a]));
}

std::vector<Vec3> get_points(std::istream& in, std::uint64_t n) {
  std::vector<Vec3> points(n);
  for (auto& p : points)
    for (int a = 0; a < 3; ++a) p[a] = io::get<float>(in, "trajectory");
  return points;
}

constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 28;

}  // namespace

ParticleState Trajectory::state(std::size_t frame) const {
  if (frame >= positions.size()) {
    throw UsageError("frame " + std::to_string(frame) + " outside trajectory of " +
                     std::to_string(positions.size()) + " frames");
  }
  ParticleState s;
  s.positions = positions[frame];
  s.velocities = velocities[frame];
  s.particle_radius = particle_radius;
  s.boundary_positions = boundary_positions;
  return s;
}

void Trajectory::append(const ParticleState& state) {
  if (!positions.empty() && state.size() != particle_count()) {
    throw DimensionError("particle count changed within a trajectory");
  }
  positions.push_back(state.positions);
  velocities.push_back(state.velocities);
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  const std::uint64_t n = traj.particle_count();
  out.write(kTrajectoryMagic, sizeof(kTrajectoryMagic));
  io::put<std::uint32_t>(out, kTrajectoryVersion);
  io::put<std::uint64_t>(out, n);
  io::put<std::uint64_t>(out, traj.boundary_positions.size());
  io::put<std::uint64_t>(out, traj.frame_count());
  io::put<float>(out, static_cast<float>(traj.particle_radius));
  for (int a = 0; a < 3; ++a) io::put<float>(out, static_cast<float>(traj.box.lo[a]));
  for (int a = 0; a < 3; ++a) io::put<float>(out, static_cast<float>(traj.box.hi[a]));
  put_points(out, traj.boundary_positions);
  for (std::size_t t = 0; t < traj.frame_count(); ++t) {
    if (traj.positions[t].size() != n || traj.velocities[t].size() != n) {
      throw DimensionError("trajectory frame " + std::to_string(t) + " has inconsistent particle count");
    }
    put_points(out, traj.positions[t]);
    put_points(out, traj.velocities[t]);
  }
  if (!out) throw IoError("failed writing trajectory");
}

Trajectory read_trajectory(std::istream& in) {
  char magic[sizeof(kTrajectoryMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kTrajectoryMagic, sizeof(magic)) != 0) {
    throw IoError("not a trajectory file (bad magic)");
  }
  const auto version = io::get<std::uint32_t>(in, "trajectory");
  if (version != kTrajectoryVersion) throw IoError("unsupported trajectory version " + std::to_string(version));
  const auto n = io::get<std::uint64_t>(in, "trajectory");
  const auto m = io::get<std::uint64_t>(in, "trajectory");
  const auto frames = io::get<std::uint64_t>(in, "trajectory");
  if (n > kMaxCount || m > kMaxCount || frames > kMaxCount) throw IoError("corrupt trajectory header");
  Trajectory traj;
  traj.particle_radius = io::get<float>(in, "trajectory");
  for (int a = 0; a < 3; ++a) traj.box.lo[a] = io::get<float>(in, "trajectory");
  for (int a = 0; a < 3; ++a) traj.box.hi[a] = io::get<float>(in, "trajectory");
  traj.boundary_positions = get_points(in, m);
  for (std::uint64_t t = 0; t < frames; ++t) {
    traj.positions.push_back(get_points(in, n));
    traj.velocities.push_back(get_points(in, n));
  }
  return traj;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_trajectory(out, traj);
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_trajectory(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_frame_text(std::ostream& out, const Trajectory& traj, std::size_t frame) {
  const auto s = traj.state(frame);
  out << std::setprecision(9);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& p = s.positions[i];
    const auto& v = s.velocities[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
}

}  // namespace fg
