#include "fluidground/sph/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "fluidground/io/config.hpp"
#include "fluidground/io/image_io.hpp"
#include "fluidground/sph/solver.hpp"
#include "fluidground/version.hpp"

namespace fg::sph {

using io::to_json;

void CameraRig::validate() const {
  if (ring_views < 1) throw ConfigError("cameras.ring_views must be >= 1");
  if (heldout_index < -1 || heldout_index >= ring_views) {
    throw ConfigError("cameras.heldout_index must be -1 or a ring index");
  }
  if (heldout_index >= 0 && ring_views < 2) throw ConfigError("cameras: holding out the only ring view leaves no warm-up view");
  if (!(distance > 0)) throw ConfigError("cameras.distance must be positive");
  if (!(fov_deg > 0 && fov_deg < 180)) throw ConfigError("cameras.fov_deg must lie in (0, 180)");
  if (std::abs(elevation_deg) >= 90 || std::abs(train_elevation_deg) >= 90) {
    throw ConfigError("cameras: elevations must lie in (-90, 90)");
  }
  if (width < 1 || height < 1) throw ConfigError("cameras: resolution must be positive");
}

std::vector<BenchmarkCamera> build_cameras(const CameraRig& rig, const Box& box) {
  rig.validate();
  const double focal = 0.5 * rig.width / std::tan(0.5 * rig.fov_deg * std::numbers::pi / 180.0);
  const Vec3 target = box.center();
  std::vector<BenchmarkCamera> out;
  for (int i = 0; i < rig.ring_views; ++i) {
    const double az = rig.azimuth_offset_deg + 360.0 * i / rig.ring_views;
    out.push_back({"ring" + std::to_string(i), i == rig.heldout_index ? "heldout" : "warmup",
                   Camera::orbit(target, rig.distance, az, rig.elevation_deg, focal, rig.width, rig.height)});
  }
  out.push_back({"train", "train",
                 Camera::orbit(target, rig.distance, rig.train_azimuth_deg, rig.train_elevation_deg, focal, rig.width,
                               rig.height)});
  return out;
}

const BenchmarkCamera& BenchmarkManifest::camera(const std::string& name) const {
  for (const auto& c : cameras)
    if (c.name == name) return c;
  throw ConfigError("benchmark has no camera named '" + name + "'");
}

std::vector<const BenchmarkCamera*> BenchmarkManifest::cameras_with_role(const std::string& role) const {
  std::vector<const BenchmarkCamera*> out;
  for (const auto& c : cameras)
    if (c.role == role) out.push_back(&c);
  return out;
}

const BenchmarkImage& BenchmarkManifest::image(int frame, const std::string& camera) const {
  for (const auto& im : images)
    if (im.frame == frame && im.camera == camera) return im;
  throw IoError("benchmark has no image for frame " + std::to_string(frame) + " of camera '" + camera + "'");
}

io::Json to_json(const BenchmarkManifest& m) {
  io::Json cams = io::Json::array();
  for (const auto& c : m.cameras) {
    io::Json cj = to_json(c.camera);
    cams.push_back(io::Json{{"name", c.name}, {"role", c.role}, {"camera", cj}});
  }
  io::Json images = io::Json::array();
  for (const auto& im : m.images) {
    io::Json ij{{"frame", im.frame}, {"camera", im.camera}, {"png", im.png}};
    if (!im.pfm.empty()) ij["pfm"] = im.pfm;
    images.push_back(ij);
  }
  io::Json observed = io::Json::array(), future = io::Json::array();
  for (int t = 0; t < m.frames; ++t) (t < m.observed_frames ? observed : future).push_back(t);
  return io::Json{{"version", m.version},
                  {"trajectory", m.trajectory},
                  {"frames", m.frames},
                  {"observed_frames", m.observed_frames},
                  {"observation_frames", observed},
                  {"future_frames", future},
                  {"preset", to_json(m.preset)},
                  {"appearance", to_json(m.appearance)},
                  {"cameras", cams},
                  {"images", images},
                  {"config", m.config}};
}

BenchmarkManifest manifest_from_json(const io::Json& j) {
  BenchmarkManifest m;
  io::StrictObject o(j, "manifest");
  o.required("version", m.version);
  o.required("trajectory", m.trajectory);
  o.required("frames", m.frames);
  o.required("observed_frames", m.observed_frames);
  o.find("observation_frames");
  o.find("future_frames");
  o.required("preset", m.preset);
  o.required("appearance", m.appearance);
  if (const io::Json* cams = o.find("cameras"); cams && cams->is_array()) {
    for (std::size_t i = 0; i < cams->size(); ++i) {
      const std::string path = "manifest.cameras[" + std::to_string(i) + "]";
      io::StrictObject co((*cams)[i], path);
      BenchmarkCamera c;
      co.required("name", c.name);
      co.required("role", c.role);
      co.required("camera", c.camera);
      co.finish();
      m.cameras.push_back(std::move(c));
    }
  } else {
    throw ConfigError("manifest.cameras: expected an array");
  }
  if (const io::Json* images = o.find("images"); images && images->is_array()) {
    for (std::size_t i = 0; i < images->size(); ++i) {
      io::StrictObject io_((*images)[i], "manifest.images[" + std::to_string(i) + "]");
      BenchmarkImage im;
      io_.required("frame", im.frame);
      io_.required("camera", im.camera);
      io_.required("png", im.png);
      io_.optional("pfm", im.pfm);
      io_.finish();
      m.images.push_back(std::move(im));
    }
  } else {
    throw ConfigError("manifest.images: expected an array");
  }
  if (const io::Json* cfg = o.find("config")) m.config = *cfg;
  o.finish();
  if (m.observed_frames < 1 || m.observed_frames > m.frames) {
    throw ConfigError("manifest.observed_frames must lie in [1, frames]");
  }
  return m;
}

BenchmarkManifest load_manifest(const std::filesystem::path& dir) {
  return manifest_from_json(io::load_json(dir / kManifestName));
}

BenchmarkManifest generate_benchmark(const FluidPreset& preset, const std::vector<BenchmarkCamera>& cameras,
                                     const AppearanceModel& appearance, const std::filesystem::path& out_dir,
                                     const BenchmarkOptions& options) {
  preset.validate();
  appearance.validate();
  if (cameras.empty()) throw ConfigError("benchmark needs at least one camera");
  for (std::size_t i = 0; i < cameras.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (cameras[i].name == cameras[k].name) throw ConfigError("duplicate camera name '" + cameras[i].name + "'");
  if (options.observed_frames < 1 || options.observed_frames > preset.steps) {
    throw ConfigError("split: observed_frames must lie in [1, preset.steps]");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError((out_dir / "images").string() + ": " + ec.message());

  BenchmarkManifest m;
  m.version = version_string();
  m.preset = preset;
  m.appearance = appearance;
  m.cameras = cameras;
  m.frames = preset.steps;
  m.observed_frames = options.observed_frames;
  m.config = options.config;

  const Trajectory traj = simulate(preset);
  save_trajectory(out_dir / m.trajectory, traj);

  for (int t = 0; t < m.frames; ++t) {
    const ParticleState state = traj.state(static_cast<std::size_t>(t));
    for (const auto& cam : cameras) {
      char stem[64];
      std::snprintf(stem, sizeof stem, "images/f%03d_", t);
      BenchmarkImage im{t, cam.name, stem + cam.name + ".png", ""};
      const Image image = render_reference(state, cam.camera, appearance);
      io::write_png(out_dir / im.png, image);
      if (options.write_pfm) {
        im.pfm = stem + cam.name + ".pfm";
        io::write_pfm(out_dir / im.pfm, image);
      }
      m.images.push_back(std::move(im));
    }
  }
  io::save_json(out_dir / kManifestName, to_json(m));
  return m;
}

}  // namespace fg::sph
