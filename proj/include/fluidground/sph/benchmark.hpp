#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fluidground/geometry/camera.hpp"
#include "fluidground/geometry/trajectory.hpp"
#include "fluidground/io/json.hpp"
#include "fluidground/sph/preset.hpp"
#include "fluidground/sph/reference_render.hpp"

namespace fg::sph {

/// Roles: "warmup" views of frame 0, "heldout" views for novel-view
/// evaluation, and the fixed "train" view of the observed sequence.
struct BenchmarkCamera {
  std::string name;
  std::string role;
  Camera camera;
};

/// Ring of cameras around the scene box plus one fixed training camera.
struct CameraRig {
  int ring_views = 5;
  int heldout_index = 2;  // ring camera kept out of warm-up; -1 keeps all
  double distance = 3.4;
  double elevation_deg = 20.0;
  double azimuth_offset_deg = 0.0;
  double train_azimuth_deg = 36.0;
  double train_elevation_deg = 15.0;
  double fov_deg = 40.0;
  int width = 64;
  int height = 64;

  void validate() const;
};

/// Cameras aimed at the box center; the ring is evenly spaced in azimuth.
std::vector<BenchmarkCamera> build_cameras(const CameraRig& rig, const Box& box);

struct BenchmarkImage {
  int frame = 0;
  std::string camera;
  std::string png;  // relative to the benchmark directory
  std::string pfm;  // empty unless written
};

struct BenchmarkManifest {
  std::string version;
  FluidPreset preset;
  AppearanceModel appearance;
  std::vector<BenchmarkCamera> cameras;
  std::string trajectory = "trajectory.fgtraj";
  int frames = 0;
  int observed_frames = 0;  // frames [0, observed) are observations, the rest future
  std::vector<BenchmarkImage> images;
  io::Json config;  // full resolved configuration of the generating command

  const BenchmarkCamera& camera(const std::string& name) const;
  std::vector<const BenchmarkCamera*> cameras_with_role(const std::string& role) const;
  const BenchmarkImage& image(int frame, const std::string& camera) const;
};

inline constexpr const char* kManifestName = "manifest.json";
io::Json to_json(const BenchmarkManifest& manifest);
BenchmarkManifest manifest_from_json(const io::Json& j);
BenchmarkManifest load_manifest(const std::filesystem::path& dir);

struct BenchmarkOptions {
  int observed_frames = 50;
  bool write_pfm = false;
  io::Json config = io::Json::object();
};

/// Simulates the preset, renders every camera at every frame, and writes the
/// trajectory, images and manifest into `out_dir` (created if missing).
BenchmarkManifest generate_benchmark(const FluidPreset& preset, const std::vector<BenchmarkCamera>& cameras,
                                     const AppearanceModel& appearance, const std::filesystem::path& out_dir,
                                     const BenchmarkOptions& options = {});

}  // namespace fg::sph
