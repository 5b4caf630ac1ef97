#include "fluidground/io/metrics.hpp"

#include <array>
#include <cmath>

namespace fg::io {

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b);
  if (a.data.empty()) throw DimensionError("cannot compare empty images");
  double acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

double psnr_from_mse(double m) { return m > 0 ? -10.0 * std::log10(m) : kIdenticalPsnr; }

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b);
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  if (a.width < kWin || a.height < kWin) throw DimensionError("SSIM needs images of at least 11x11 pixels");
  std::array<double, kWin> g{};
  double gsum = 0;
  for (int i = 0; i < kWin; ++i) {
    const double x = i - kWin / 2;
    g[i] = std::exp(-x * x / (2 * kSigma * kSigma));
    gsum += g[i];
  }
  for (auto& v : g) v /= gsum;

  double total = 0;
  std::size_t count = 0;
  for (int c = 0; c < 3; ++c)
    for (int v0 = 0; v0 + kWin <= a.height; ++v0)
      for (int u0 = 0; u0 + kWin <= a.width; ++u0) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int j = 0; j < kWin; ++j)
          for (int i = 0; i < kWin; ++i) {
            const double w = g[i] * g[j];
            const double x = a.at(u0 + i, v0 + j, c), y = b.at(u0 + i, v0 + j, c);
            mx += w * x;
            my += w * y;
            sxx += w * x * x;
            syy += w * y * y;
            sxy += w * x * y;
          }
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  return total / static_cast<double>(count);
}

}  // namespace fg::io
