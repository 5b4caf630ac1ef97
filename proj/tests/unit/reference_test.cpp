#include <Eigen/Geometry>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "fluidground/io/image_io.hpp"
#include "fluidground/io/json.hpp"
#include "fluidground/random.hpp"
#include "fluidground/sph/benchmark.hpp"
#include "fluidground/sph/solver.hpp"

using namespace fg;
using namespace fg::sph;

namespace {

ParticleState blob(const Vec3& center, int per_axis, double spacing, double r_p = 0.05) {
  ParticleState s;
  s.particle_radius = r_p;
  const double off = 0.5 * (per_axis - 1);
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < per_axis; ++k) {
        s.positions.push_back(center + spacing * Vec3(i - off, j - off, k - off));
        s.velocities.push_back(Vec3::Zero());
      }
  return s;
}

Camera forward_camera(int size, double focal) {
  Camera c;
  c.width = size;
  c.height = size;
  c.focal = focal;
  return c;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fg_reference_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("render_reference of an empty particle set is the background") {
  AppearanceModel a;
  a.background_color = Vec3(0.1, 0.7, 0.3);
  ParticleState empty;
  const Image im = render_reference(empty, forward_camera(9, 9), a);
  for (int v = 0; v < 9; ++v)
    for (int u = 0; u < 9; ++u) CHECK(im.pixel(u, v) == Vec3(0.1f, 0.7f, 0.3f).cast<double>());
}

TEST_CASE("saturated density shows the analytic surface color regardless of background") {
  // Dense slab filling the whole frustum of a narrow camera.
  ParticleState slab;
  slab.particle_radius = 0.05;
  for (int i = -6; i <= 6; ++i)
    for (int j = -6; j <= 6; ++j)
      for (int k = 0; k <= 10; ++k) {
        slab.positions.push_back(Vec3(0.1 * i, 0.1 * j, 1.0 + 0.1 * k));
        slab.velocities.push_back(Vec3::Zero());
      }
  AppearanceModel a;
  a.density_gain = 1e5;
  const Camera cam = forward_camera(12, 60);
  a.background_color = Vec3(1, 1, 1);
  const Image white = render_reference(slab, cam, a);
  a.background_color = Vec3(0, 0, 0);
  const Image black = render_reference(slab, cam, a);
  const Vec3 expected = a.base_color * (1 - a.view_tint_gain);
  for (int v = 0; v < 12; ++v)
    for (int u = 0; u < 12; ++u) {
      CHECK((white.pixel(u, v) - black.pixel(u, v)).cwiseAbs().maxCoeff() < 1e-6);
      // d_c points almost along the ray near the slab's front face.
      CHECK((white.pixel(u, v) - expected).cwiseAbs().maxCoeff() < 0.01);
    }
}

TEST_CASE("translating a blob parallel to the image plane translates the image") {
  AppearanceModel a;
  a.density_gain = 0.2;
  const Camera cam = forward_camera(48, 48);
  const double depth = 3.0;
  const int shift_px = 8;
  const ParticleState s0 = blob(Vec3(0, 0, depth), 3, 0.1);
  const ParticleState s1 = blob(Vec3(shift_px * depth / cam.focal, 0, depth), 3, 0.1);
  const Image i0 = render_reference(s0, cam, a), i1 = render_reference(s1, cam, a);

  int best_du = 0, best_dv = 0;
  double best = -1;
  for (int dv = -12; dv <= 12; ++dv)
    for (int du = -12; du <= 12; ++du) {
      double acc = 0;
      for (int v = 0; v < 48; ++v)
        for (int u = 0; u < 48; ++u) {
          const int u2 = u + du, v2 = v + dv;
          if (u2 < 0 || v2 < 0 || u2 >= 48 || v2 >= 48) continue;
          for (int c = 0; c < 3; ++c) acc += (1.0 - i0.at(u, v, c)) * (1.0 - i1.at(u2, v2, c));
        }
      if (acc > best) {
        best = acc;
        best_du = du;
        best_dv = dv;
      }
    }
  CHECK(best_du == shift_px);
  CHECK(best_dv == 0);
}

TEST_CASE("render_reference is equivariant under rigid motions of particles and camera") {
  FluidPreset preset = preset_by_name("water_cube");
  const ParticleState state = seed_particles(preset);
  const Camera cam = Camera::orbit(preset.box.center(), 3.0, 25, 20, 50.0, 32, 32);
  const AppearanceModel a;
  const Image base = render_reference(state, cam, a);

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    const Vec3 axis = Vec3(uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5).normalized();
    const Mat3 R = Eigen::AngleAxisd(6.0 * uniform01(rng), axis).toRotationMatrix();
    const Vec3 t(uniform01(rng), -uniform01(rng), 2 * uniform01(rng));
    ParticleState moved = state;
    for (auto& p : moved.positions) p = R * p + t;
    Camera cam2 = cam;
    cam2.origin = R * cam.origin + t;
    cam2.rotation = R * cam.rotation;
    const Image im = render_reference(moved, cam2, a);
    double mad = 0;
    for (std::size_t i = 0; i < im.data.size(); ++i) mad += std::abs(im.data[i] - base.data[i]);
    mad /= static_cast<double>(im.data.size());
    CHECK(mad < 2.0 / 255.0);
  }
}

TEST_CASE("appearance validation") {
  AppearanceModel a;
  a.density_gain = -1;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = AppearanceModel{};
  a.view_tint_gain = 1.5;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  CHECK(appearance_for_density(1420).base_color != appearance_for_density(1000).base_color);
}

TEST_CASE("camera rig layout") {
  const auto cams = build_cameras(CameraRig{}, preset_by_name("water_cube").box);
  REQUIRE(cams.size() == 6);
  int warm = 0, held = 0, train = 0;
  for (const auto& c : cams) {
    warm += c.role == "warmup";
    held += c.role == "heldout";
    train += c.role == "train";
    CHECK(c.camera.width == 64);
    // Every camera looks at the box center.
    const Vec3 to_center = (Vec3(0, 0, 0.8) - c.camera.origin).normalized();
    CHECK(to_center.dot(c.camera.forward()) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(warm == 4);
  CHECK(held == 1);
  CHECK(train == 1);
  CameraRig bad;
  bad.heldout_index = 7;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("generate_benchmark writes the split, images and a reloadable manifest") {
  FluidPreset preset = preset_by_name("water_cube");
  preset.steps = 60;
  CameraRig rig;
  rig.ring_views = 4;
  rig.heldout_index = -1;
  rig.width = 8;
  rig.height = 8;
  auto cams = build_cameras(rig, preset.box);
  cams.pop_back();  // the four ring cameras only
  const auto dir = scratch_dir("full");
  BenchmarkOptions opts;
  opts.observed_frames = 50;
  const BenchmarkManifest m = generate_benchmark(preset, cams, AppearanceModel{}, dir, opts);

  CHECK(m.images.size() == 240);
  std::size_t pngs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "images")) pngs += e.path().extension() == ".png";
  CHECK(pngs == 240);

  const io::Json j = io::load_json(dir / kManifestName);
  CHECK(j["observation_frames"].size() == 50);
  CHECK(j["future_frames"].size() == 10);
  CHECK(j["future_frames"][0] == 50);

  const BenchmarkManifest back = load_manifest(dir);
  CHECK(back.frames == 60);
  CHECK(back.observed_frames == 50);
  CHECK(back.cameras.size() == 4);
  CHECK(back.camera("ring2").camera.rotation == cams[2].camera.rotation);
  CHECK(to_json(back) == to_json(m));

  const Trajectory traj = load_trajectory(dir / m.trajectory);
  CHECK(traj.frame_count() == 60);
  const Image frame7 = io::read_png(dir / m.image(7, "ring1").png);
  CHECK(frame7.width == 8);
}

TEST_CASE("benchmark regeneration is bit-identical") {
  FluidPreset preset = preset_by_name("water_sphere");
  preset.steps = 5;
  CameraRig rig;
  rig.width = 12;
  rig.height = 10;
  const auto cams = build_cameras(rig, preset.box);
  BenchmarkOptions opts;
  opts.observed_frames = 3;
  opts.write_pfm = true;
  const auto a = scratch_dir("a"), b = scratch_dir("b");
  const auto ma = generate_benchmark(preset, cams, AppearanceModel{}, a, opts);
  generate_benchmark(preset, cams, AppearanceModel{}, b, opts);
  CHECK(read_bytes(a / "trajectory.fgtraj") == read_bytes(b / "trajectory.fgtraj"));
  CHECK(read_bytes(a / kManifestName) == read_bytes(b / kManifestName));
  for (const auto& im : ma.images) {
    CHECK(read_bytes(a / im.png) == read_bytes(b / im.png));
    CHECK(read_bytes(a / im.pfm) == read_bytes(b / im.pfm));
  }
}

TEST_CASE("generate_benchmark rejects bad inputs before writing") {
  FluidPreset preset = preset_by_name("water_cube");
  const auto cams = build_cameras(CameraRig{}, preset.box);
  BenchmarkOptions opts;
  opts.observed_frames = 61;
  const auto dir = scratch_dir("bad");
  CHECK_THROWS_AS(generate_benchmark(preset, cams, AppearanceModel{}, dir, opts), ConfigError);
  CHECK_THROWS_AS(generate_benchmark(preset, {}, AppearanceModel{}, dir), ConfigError);
  CHECK(!std::filesystem::exists(dir));
}
