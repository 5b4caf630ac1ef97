#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fluidground/encoding/neighborhood.hpp"
#include "fluidground/geometry/camera.hpp"
#include "fluidground/io/image.hpp"
#include "fluidground/random.hpp"
#include "fluidground/render/field.hpp"
#include "fluidground/render/sampling.hpp"

namespace fg::render {

struct RendererConfig {
  FieldConfig field;
  enc::EncodingOptions encoding;
  int n_coarse = 64;
  int n_fine = 128;
  double search_radius_factor = 9.0;  // r_s = factor * r_p
  double box_margin = 0.1;            // near/far from the scene box grown by this fraction
  std::optional<double> near_override;
  std::optional<double> far_override;
  Vec3 background = Vec3::Ones();
  std::uint64_t seed = 0;  // parameter initialization

  void validate() const;
};

struct RayBatchOutput {
  ad::Tensor coarse;  // [R, 3]
  ad::Tensor fine;    // [R, 3]; equals coarse when n_fine = 0
  std::vector<std::vector<double>> coarse_weights;
};

/// Particle-conditioned radiance field with separate coarse and fine networks.
class Renderer {
 public:
  Renderer() = default;
  Renderer(RendererConfig config, Box scene_box, double particle_radius);

  const RendererConfig& config() const { return config_; }
  const Box& scene_box() const { return box_; }
  double search_radius() const { return search_radius_; }
  const enc::FeatureScaling& scaling() const { return scaling_; }
  FieldNetwork& coarse_net() { return coarse_; }
  FieldNetwork& fine_net() { return fine_; }

  /// Sampling interval of a ray: the grown scene box, or the configured overrides.
  std::optional<std::pair<double, double>> ray_bounds(const Ray& ray) const;

  /// Renders rays against the particles [N, 3]. Strata are jittered when `rng`
  /// is given and use midpoints otherwise. `hash` defaults to one built here.
  RayBatchOutput render_rays(ad::Tape& tape, const ad::Tensor& particles, std::span<const Ray> rays, Rng* rng,
                             std::shared_ptr<const SpatialHash> hash = nullptr) const;

  struct ImageOptions {
    bool perturb = false;
    std::uint64_t seed = 0;
    std::size_t chunk = 256;
  };
  /// Full-image inference render (fine output).
  Image render_image(std::span<const Vec3> particles, const Camera& camera, const ImageOptions& options) const;
  Image render_image(std::span<const Vec3> particles, const Camera& camera) const {
    return render_image(particles, camera, ImageOptions{});
  }

  /// All parameters, named "renderer/coarse/..." and "renderer/fine/...".
  ad::NamedTensors parameters() const;

 private:
  struct Pass {
    ad::Tensor color;
    std::vector<double> weights;
  };
  Pass run_pass(ad::Tape& tape, const FieldNetwork& net, const ad::Tensor& particles,
                const std::shared_ptr<const SpatialHash>& hash, std::span<const Ray> rays,
                const std::vector<RaySamples>& samples) const;

  RendererConfig config_;
  Box box_;
  double search_radius_ = 0.45;
  enc::FeatureScaling scaling_;
  FieldNetwork coarse_;
  FieldNetwork fine_;
};

}  // namespace fg::render
