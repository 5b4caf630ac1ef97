#pragma once

#include <vector>

#include "fluidground/errors.hpp"
#include "fluidground/geometry/types.hpp"

namespace fg {

/// Interleaved RGB float image, row-major, (u, v) = (column, row).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, const Vec3& fill = Vec3::Zero()) : width(w), height(h), data(3 * std::size_t(w) * h) {
    for (std::size_t i = 0; i < data.size(); i += 3)
      for (int c = 0; c < 3; ++c) data[i + c] = static_cast<float>(fill[c]);
  }

  std::size_t pixel_count() const { return std::size_t(width) * height; }
  float& at(int u, int v, int c) { return data[3 * (std::size_t(v) * width + u) + c]; }
  float at(int u, int v, int c) const { return data[3 * (std::size_t(v) * width + u) + c]; }
  Vec3 pixel(int u, int v) const { return Vec3(at(u, v, 0), at(u, v, 1), at(u, v, 2)); }
  void set(int u, int v, const Vec3& rgb) {
    for (int c = 0; c < 3; ++c) at(u, v, c) = static_cast<float>(rgb[c]);
  }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

inline void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("image size mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                         " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

}  // namespace fg
