#include "fluidground/io/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "fluidground/io/binary.hpp"

namespace fg::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(float v) {
  const float c = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

// Silent handlers; failures surface as IoError through setjmp.
void png_error_quiet(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_warning_quiet(png_structp, png_const_charp) {}

[[noreturn]] void png_fail(const std::filesystem::path& path, const char* what) {
  throw IoError(path.string() + ": " + what);
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  File f(std::fopen(path.string().c_str(), "wb"));
  if (!f) png_fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_quiet, png_warning_quiet);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    png_fail(path, "libpng initialization failed");
  }
  std::vector<std::uint8_t> bytes(image.data.size());
  std::transform(image.data.begin(), image.data.end(), bytes.begin(), to_byte);
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  for (int v = 0; v < image.height; ++v) rows[v] = bytes.data() + 3 * std::size_t(v) * image.width;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    png_fail(path, "PNG encoding failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.string().c_str(), "rb"));
  if (!f) png_fail(path, "cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_quiet, png_warning_quiet);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path, "libpng initialization failed");
  }
  Image image;
  std::vector<std::uint8_t> bytes;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path, "not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  // Normalize every input to 8-bit RGB.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != 3 * std::size_t(w)) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path, "unsupported PNG layout");
  }
  bytes.resize(3 * std::size_t(w) * h);
  rows.resize(static_cast<std::size_t>(h));
  for (int v = 0; v < h; ++v) rows[v] = bytes.data() + 3 * std::size_t(v) * w;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  image = Image(w, h);
  for (std::size_t i = 0; i < bytes.size(); ++i) image.data[i] = static_cast<float>(bytes[i]) / 255.0f;
  return image;
}

void write_pfm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "PF\n" << image.width << ' ' << image.height << "\n-1.0\n";
  for (int v = image.height - 1; v >= 0; --v)
    for (int u = 0; u < image.width; ++u)
      for (int c = 0; c < 3; ++c) put<float>(out, image.at(u, v, c));
  if (!out) throw IoError(path.string() + ": write failed");
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (!in || magic != "PF" || w <= 0 || h <= 0 || scale >= 0) {
    throw IoError(path.string() + ": not a little-endian color PFM");
  }
  Image image(w, h);
  for (int v = h - 1; v >= 0; --v)
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < 3; ++c) image.at(u, v, c) = get<float>(in, "PFM");
  return image;
}

Image quantize8(const Image& image) {
  Image out = image;
  for (auto& v : out.data) v = static_cast<float>(to_byte(v)) / 255.0f;
  return out;
}

}  // namespace fg::io
