#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fluidground/autodiff/tensor.hpp"
#include "fluidground/geometry/spatial_hash.hpp"
#include "fluidground/geometry/types.hpp"

namespace fg::enc {

using ad::Real;
using ad::Tape;
using ad::Tensor;

struct EncodingOptions {
  int point_levels = 10;  // Γ levels for p_c, σ_p, v_D and the raw sample position
  int dir_levels = 4;     // Γ levels for d_c and the raw ray direction
  double sigma_cap = 256.0;
  /// Divide Σ w_i p_i by Σ w_i instead of K.
  bool normalized_center = false;
  /// Per-axis mean absolute deviation instead of the scalar mean distance.
  bool per_axis_deformation = false;

  std::size_t deformation_width() const { return per_axis_deformation ? 3 : 1; }
  /// Columns of the raw feature block: p_c(3), σ_p, v_D(1 or 3), d_c(3).
  std::size_t raw_width() const { return 3 + 1 + deformation_width() + 3; }
  std::size_t ex_width() const { return 2 * static_cast<std::size_t>(point_levels) * (4 + deformation_width()); }
  std::size_t ed_width() const { return 2 * static_cast<std::size_t>(dir_levels) * 3; }
  void validate() const;
};

/// (1/K) Σ w_i p_i, or (Σ w_i p_i) / (Σ w_i) when `normalized`. Throws UsageError for K = 0.
Vec3 fictitious_center(const NeighborSet& nbrs, bool normalized = false);
/// Σ w_i.
double sphere_density(const NeighborSet& nbrs);
/// (1/K) Σ_i |l_i - mean(l)|. Throws UsageError for K = 0.
double deformation(const NeighborSet& nbrs);
/// Per-axis (1/K) Σ_i |l_i,a - mean(l)_a|.
Vec3 deformation_per_axis(const NeighborSet& nbrs);
/// Unit vector from o toward p_c; nullopt when they coincide.
std::optional<Vec3> particle_relative_direction(const Vec3& p_c, const Vec3& origin);

/// Pre-encoding quantities of one sample point.
struct NeighborhoodFeatures {
  Vec3 p_c = Vec3::Zero();
  double sigma_p = 0;
  Vec3 v_D = Vec3::Zero();  // scalar form stored in v_D.x()
  Vec3 d_c = Vec3::UnitZ();
  std::size_t count = 0;
};

/// Empty neighborhoods use p_c = x, σ_p = 0, v_D = 0, d_c = ray direction; a
/// center coinciding with the camera origin also falls back to the ray direction.
NeighborhoodFeatures neighborhood_features(const NeighborSet& nbrs, const Vec3& x, const Vec3& origin,
                                           const Vec3& ray_dir, const EncodingOptions& options);

/// Maps scene quantities into the ranges fed to Γ: positions through the
/// scene box to [-1, 1]^3, σ_p / cap, v_D / r_s.
struct FeatureScaling {
  Vec3 center = Vec3::Zero();
  Vec3 half_extent = Vec3::Ones();
  double sigma_cap = 256.0;
  double search_radius = 0.45;

  static FeatureScaling from_box(const Box& box, double search_radius, double sigma_cap);
  Vec3 normalize_point(const Vec3& p) const { return (p - center).cwiseQuotient(half_extent); }
};

struct NeighborhoodEncoding {
  NeighborhoodFeatures features;
  std::vector<Real> e_x;
  std::vector<Real> e_d;
};

/// Single-sample reference path (no tape).
NeighborhoodEncoding encode_neighborhood(const NeighborSet& nbrs, const Vec3& x, const Vec3& origin,
                                         const Vec3& ray_dir, const FeatureScaling& scaling,
                                         const EncodingOptions& options);

/// Query points with their ray origins and directions (one entry per sample).
struct SampleQuery {
  std::vector<Vec3> points;
  std::vector<Vec3> origins;
  std::vector<Vec3> directions;
  std::size_t size() const { return points.size(); }
};

/// Hash over the current values of an [N, 3] particle tensor.
std::shared_ptr<const SpatialHash> build_hash(const Tensor& particles, double search_radius);

/// Fused, differentiable raw features [S, raw_width] for every query point.
/// Gradients reach `particles` through l_i and w_i of the returned neighbors.
Tensor raw_features(Tape& tape, const Tensor& particles, std::shared_ptr<const SpatialHash> hash,
                    const SampleQuery& query, double search_radius, const EncodingOptions& options);

struct EncodedBatch {
  Tensor raw;  // [S, raw_width]
  Tensor e_x;  // [S, ex_width]
  Tensor e_d;  // [S, ed_width]
};

/// Scales the raw features and applies Γ on the tape.
EncodedBatch encode_batch(Tape& tape, const Tensor& raw, const FeatureScaling& scaling,
                          const EncodingOptions& options);

}  // namespace fg::enc
