#pragma once

#include <span>
#include <vector>

#include "fluidground/autodiff/tensor.hpp"
#include "fluidground/geometry/types.hpp"

namespace fg::render {

/// Result of alpha-compositing one ray.
struct Composite {
  Vec3 color = Vec3::Zero();
  std::vector<double> weights;  // T_i (1 - exp(-σ_i δ_i))
  double transmittance = 1.0;   // T_{S+1}
};

/// C = Σ_i T_i (1 - exp(-σ_i δ_i)) c_i + T_{S+1} background, T_i = exp(-Σ_{j<i} σ_j δ_j).
Composite composite(std::span<const double> sigma, std::span<const Vec3> color, std::span<const double> delta,
                    const Vec3& background);

/// Differentiable compositing of a batch of rays. Samples of ray r occupy rows
/// [ray_offsets[r], ray_offsets[r+1]) of `sigma` [S, 1] and `color` [S, 3].
/// Returns [R, 3]; per-sample weights are written to `weights` when given.
ad::Tensor volume_render(ad::Tape& tape, const ad::Tensor& sigma, const ad::Tensor& color,
                         std::vector<double> delta, std::vector<std::size_t> ray_offsets, const Vec3& background,
                         std::vector<double>* weights = nullptr);

}  // namespace fg::render
