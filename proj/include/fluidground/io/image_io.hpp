#pragma once

#include <filesystem>

#include "fluidground/io/image.hpp"

namespace fg::io {

/// 8-bit RGB PNG; values are clamped to [0, 1] and rounded to the nearest level.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Color PFM (float32, little-endian, bottom row first).
void write_pfm(const std::filesystem::path& path, const Image& image);
Image read_pfm(const std::filesystem::path& path);

/// Image with every channel rounded to the nearest multiple of 1/255.
Image quantize8(const Image& image);

}  // namespace fg::io
