#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fluidground/io/config.hpp"
#include "fluidground/io/image_io.hpp"
#include "fluidground/io/metrics.hpp"
#include "fluidground/random.hpp"

using namespace fg;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fg_io_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Image random_image(int w, int h, Rng& rng) {
  Image im(w, h);
  for (auto& v : im.data) v = static_cast<float>(uniform01(rng));
  return im;
}

// Pattern pair whose SSIM was evaluated independently with scikit-image
// (gaussian_weights, sigma 1.5, population covariance, data_range 1).
std::pair<Image, Image> ssim_reference_pair() {
  Image a(40, 32), b(40, 32);
  for (int v = 0; v < 32; ++v)
    for (int u = 0; u < 40; ++u)
      for (int c = 0; c < 3; ++c) {
        a.at(u, v, c) = static_cast<float>(0.5 + 0.4 * std::sin(0.3 * u + 0.7 * v + c));
        const double bv = static_cast<double>(a.at(u, v, c)) + 0.15 * std::cos(0.11 * u * v + 0.5 * c);
        b.at(u, v, c) = static_cast<float>(std::clamp(bv, 0.0, 1.0));
      }
  return {a, b};
}

// Direct 2D-window evaluation, written independently of the library's loops.
double ssim_oracle(const Image& a, const Image& b) {
  double w2[11][11], wsum = 0;
  for (int j = 0; j < 11; ++j)
    for (int i = 0; i < 11; ++i) {
      w2[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      wsum += w2[j][i];
    }
  double total = 0;
  int n = 0;
  for (int c = 0; c < 3; ++c)
    for (int y = 5; y + 5 < a.height; ++y)
      for (int x = 5; x + 5 < a.width; ++x) {
        double ma = 0, mb = 0;
        for (int j = -5; j <= 5; ++j)
          for (int i = -5; i <= 5; ++i) {
            ma += w2[j + 5][i + 5] / wsum * a.at(x + i, y + j, c);
            mb += w2[j + 5][i + 5] / wsum * b.at(x + i, y + j, c);
          }
        double va = 0, vb = 0, cov = 0;
        for (int j = -5; j <= 5; ++j)
          for (int i = -5; i <= 5; ++i) {
            const double w = w2[j + 5][i + 5] / wsum;
            const double da = a.at(x + i, y + j, c) - ma, db = b.at(x + i, y + j, c) - mb;
            va += w * da * da;
            vb += w * db * db;
            cov += w * da * db;
          }
        const double c1 = 1e-4, c2 = 9e-4;
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++n;
      }
  return total / n;
}

}  // namespace

TEST_CASE("PNG round trip of an 8-bit image is lossless") {
  Rng rng(3);
  const Image im = io::quantize8(random_image(17, 9, rng));
  const auto path = scratch_dir("png") / "a.png";
  io::write_png(path, im);
  const Image back = io::read_png(path);
  REQUIRE(back.same_shape(im));
  CHECK(back.data == im.data);
}

TEST_CASE("PNG clamps out-of-range values") {
  Image im(2, 1);
  im.set(0, 0, Vec3(-0.5, 2.0, 0.5));
  im.set(1, 0, Vec3(std::nan(""), 1.0, 0.0));
  const auto path = scratch_dir("png_clamp") / "a.png";
  io::write_png(path, im);
  const Image back = io::read_png(path);
  CHECK(back.pixel(0, 0).isApprox(Vec3(0, 1, 128 / 255.0), 1e-7));
  CHECK(back.at(1, 0, 0) == 0.0f);
}

TEST_CASE("PFM round trip is bit-exact") {
  Rng rng(4);
  Image im = random_image(13, 7, rng);
  im.at(0, 0, 0) = -1.5e-30f;
  im.at(12, 6, 2) = 3.0e30f;
  const auto path = scratch_dir("pfm") / "a.pfm";
  io::write_pfm(path, im);
  const Image back = io::read_pfm(path);
  REQUIRE(back.same_shape(im));
  CHECK(std::memcmp(back.data.data(), im.data.data(), im.data.size() * sizeof(float)) == 0);
}

TEST_CASE("image readers surface I/O failures with paths") {
  const auto dir = scratch_dir("bad");
  CHECK_THROWS_AS(io::read_png(dir / "missing.png"), IoError);
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(io::read_png(dir / "junk.png"), IoError);
  std::ofstream(dir / "junk.pfm") << "P6\n1 1\n255\n";
  CHECK_THROWS_AS(io::read_pfm(dir / "junk.pfm"), IoError);
  try {
    io::read_png(dir / "missing.png");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("missing.png") != std::string::npos);
  }
}

TEST_CASE("psnr examples") {
  Rng rng(5);
  const Image a = random_image(8, 8, rng);
  CHECK(io::psnr(a, a) == io::kIdenticalPsnr);

  Image base(6, 5, Vec3::Constant(0.25)), shifted(6, 5, Vec3::Constant(0.35));
  CHECK(io::mse(base, shifted) == doctest::Approx(0.01).epsilon(1e-6));
  // Stored as floats, so the offset is 0.1 only to float precision.
  CHECK(std::abs(io::psnr(base, shifted) - 20.0) < 1e-5);

  CHECK_THROWS_AS(io::psnr(Image(2, 2), Image(3, 2)), DimensionError);
}

TEST_CASE("psnr matches a scalar loop oracle on random pairs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Image a = random_image(11, 7, rng), b = random_image(11, 7, rng);
    double acc = 0;
    for (int v = 0; v < 7; ++v)
      for (int u = 0; u < 11; ++u)
        for (int c = 0; c < 3; ++c) {
          const double d = double(a.at(u, v, c)) - double(b.at(u, v, c));
          acc += d * d;
        }
    const double oracle = -10.0 * std::log10(acc / (11 * 7 * 3));
    CHECK(std::abs(io::psnr(a, b) - oracle) < 1e-9);
  }
}

TEST_CASE("ssim examples") {
  Rng rng(6);
  const Image a = random_image(16, 16, rng);
  CHECK(io::ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("image against its negative is anti-correlated") {
    Image pattern(24, 24), negative(24, 24);
    for (int v = 0; v < 24; ++v)
      for (int u = 0; u < 24; ++u) {
        const double x = ((u / 3 + v / 3) % 2) ? 0.9 : 0.1;
        pattern.set(u, v, Vec3::Constant(x));
        negative.set(u, v, Vec3::Constant(1 - x));
      }
    CHECK(io::ssim(pattern, negative) < 0);
  }
  SUBCASE("constant images reduce to the luminance term") {
    const double x = 0.25, y = 0.75;
    Image ca(12, 12, Vec3::Constant(x)), cb(12, 12, Vec3::Constant(y));
    const double expected = (2 * x * y + 1e-4) / (x * x + y * y + 1e-4);
    CHECK(io::ssim(ca, cb) == doctest::Approx(expected).epsilon(1e-9));
  }
  SUBCASE("matches the scikit-image value on a fixed pattern pair") {
    const auto [pa, pb] = ssim_reference_pair();
    CHECK(io::ssim(pa, pb) == doctest::Approx(0.9133498273110862).epsilon(1e-9));
  }
  CHECK_THROWS_AS(io::ssim(Image(10, 20), Image(10, 20)), DimensionError);
}

TEST_CASE("ssim matches a direct window oracle on random pairs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const Image a = random_image(14, 13, rng);
    Image b = a;
    for (auto& v : b.data) v = static_cast<float>(std::clamp(v + 0.3 * (uniform01(rng) - 0.5), 0.0, 1.0));
    const double s = io::ssim(a, b);
    CHECK(std::abs(s - ssim_oracle(a, b)) < 1e-10);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("strict JSON objects reject unknown keys with their path") {
  const io::Json j = io::Json::parse(R"({"base": "water_cube", "viscosity": 0.2, "viscosty": 1})");
  sph::FluidPreset p;
  try {
    read_json(j, "scene.preset", p);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "scene.preset.viscosty: unknown key");
  }
  CHECK_THROWS_AS(read_json(io::Json("lava_lamp"), "scene.preset", p), ConfigError);
  CHECK_THROWS_AS(read_json(io::Json::parse(R"({"dt": -1})"), "scene.preset", p), ConfigError);
  CHECK_THROWS_AS(read_json(io::Json::parse(R"({"steps": 2.5})"), "scene.preset", p), ConfigError);
}

TEST_CASE("preset JSON: names, overrides and round trip") {
  sph::FluidPreset p;
  read_json(io::Json("honey_cone"), "preset", p);
  CHECK(p.viscosity == 0.8);
  read_json(io::Json::parse(R"({"base": "water_sphere", "viscosity": 0.3, "steps": 12})"), "preset", p);
  CHECK(p.shape == sph::InitialShape::Sphere);
  CHECK(p.viscosity == 0.3);
  CHECK(p.steps == 12);

  sph::FluidPreset back;
  read_json(to_json(p), "preset", back);
  CHECK(to_json(back) == to_json(p));
}

TEST_CASE("camera and appearance JSON round trip") {
  const Camera cam = Camera::orbit(Vec3(0, 0, 0.8), 3.0, 30, 20, 70.0, 64, 48);
  Camera back;
  read_json(to_json(cam), "camera", back);
  CHECK(back.width == 64);
  CHECK(back.height == 48);
  CHECK(back.origin == cam.origin);
  CHECK(back.rotation == cam.rotation);

  sph::AppearanceModel a;
  a.base_color = Vec3(0.1, 0.2, 0.3);
  sph::AppearanceModel a2;
  read_json(to_json(a), "appearance", a2);
  CHECK(a2.base_color == a.base_color);
  CHECK_THROWS_AS(read_json(io::Json::parse(R"({"base_color": [2, 0, 0]})"), "appearance", a2), ConfigError);
}
