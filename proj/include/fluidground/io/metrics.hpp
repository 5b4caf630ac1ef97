#pragma once

#include "fluidground/io/image.hpp"

namespace fg::io {

/// PSNR reported for identical images.
inline constexpr double kIdenticalPsnr = 99.0;

/// Mean over pixels and channels of the squared difference.
double mse(const Image& a, const Image& b);
/// -10 log10(MSE) for unit-range images; kIdenticalPsnr when MSE = 0.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

/// Single-scale SSIM: 11x11 Gaussian window (σ = 1.5), C1 = 0.01², C2 = 0.03²,
/// averaged over valid window positions and channels.
double ssim(const Image& a, const Image& b);

}  // namespace fg::io
