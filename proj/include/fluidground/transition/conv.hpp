#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fluidground/autodiff/tensor.hpp"
#include "fluidground/geometry/types.hpp"

namespace fg::transition {

using ad::Real;
using ad::Tape;
using ad::Tensor;

/// Neighbor pairs of every fluid particle among fluid and boundary points.
/// Neighbor indices address the concatenation [fluid; boundary]; pairs of
/// fluid particle i occupy [offsets[i], offsets[i+1]) in canonical order.
struct PairList {
  std::size_t fluid_count = 0;
  std::size_t boundary_count = 0;
  std::vector<std::uint32_t> center;
  std::vector<std::uint32_t> neighbor;
  std::vector<std::size_t> offsets{0};

  std::size_t size() const { return center.size(); }
};

/// Pairs with 0 < |x_j - x_i| < radius, excluding each particle itself.
std::shared_ptr<const PairList> build_pairs(std::span<const Vec3> fluid, std::span<const Vec3> boundary, double radius);

/// (x_j - x_i) / radius per pair, [P, 3]. Gradients flow to the fluid positions
/// [N, 3]; boundary points are constants.
Tensor pair_offsets(Tape& tape, const Tensor& fluid, std::span<const Vec3> boundary, std::shared_ptr<const PairList> pairs,
                    double radius);

/// a = (1 - |q|^2)^3 per row of the normalized offsets q, [P, 1].
Tensor window(Tape& tape, const Tensor& offsets);

/// out[i, c] = Σ_{p ∈ i} a_p Σ_f K[p, c F + f] h[j_p, f] with F = features.cols().
/// kernel [P, C F], weights [P, 1], features [N + M, F]; returns [N, C].
Tensor aggregate(Tape& tape, const Tensor& kernel, const Tensor& weights, const Tensor& features,
                 std::shared_ptr<const PairList> pairs);

/// Rows longer than `bound` are scaled back to length `bound`; `clamped`
/// receives the number of such rows.
Tensor clamp_row_norms(Tape& tape, const Tensor& a, Real bound, std::size_t* clamped = nullptr);

/// a[n, c] - row[c].
Tensor sub_row(Tape& tape, const Tensor& a, const Tensor& row);

/// Per-row sqrt(|a_i|^2 + eps^2) - eps, [N, 1].
Tensor smooth_row_norms(Tape& tape, const Tensor& a, Real eps);

}  // namespace fg::transition
