#include "fluidground/render/renderer.hpp"

#include <algorithm>

#include "fluidground/autodiff/ops.hpp"
#include "fluidground/errors.hpp"
#include "fluidground/render/volume.hpp"

namespace fg::render {

void RendererConfig::validate() const {
  field.validate();
  encoding.validate();
  if (n_coarse < 1) throw ConfigError("renderer: n_coarse must be >= 1");
  if (n_fine < 0) throw ConfigError("renderer: n_fine must be >= 0");
  if (!(search_radius_factor > 0)) throw ConfigError("renderer: search_radius_factor must be > 0");
  if (box_margin < 0) throw ConfigError("renderer: box_margin must be >= 0");
  if (near_override && far_override && !(*far_override > *near_override)) {
    throw ConfigError("renderer: far must exceed near");
  }
  for (int c = 0; c < 3; ++c)
    if (background[c] < 0 || background[c] > 1) throw ConfigError("renderer: background must lie in [0, 1]");
}

Renderer::Renderer(RendererConfig config, Box scene_box, double particle_radius)
    : config_(std::move(config)), box_(scene_box) {
  config_.validate();
  if (!(particle_radius > 0)) throw ConfigError("renderer: particle radius must be > 0");
  search_radius_ = config_.search_radius_factor * particle_radius;
  scaling_ = enc::FeatureScaling::from_box(box_, search_radius_, config_.encoding.sigma_cap);
  coarse_ = FieldNetwork(config_.field, config_.encoding, "renderer/coarse", config_.seed * 2 + 11);
  fine_ = FieldNetwork(config_.field, config_.encoding, "renderer/fine", config_.seed * 2 + 12);
}

std::optional<std::pair<double, double>> Renderer::ray_bounds(const Ray& ray) const {
  auto hit = intersect_box(ray, box_.expanded(config_.box_margin));
  if (!hit) return std::nullopt;
  if (config_.near_override) hit->first = *config_.near_override;
  if (config_.far_override) hit->second = *config_.far_override;
  if (!(hit->second > hit->first)) return std::nullopt;
  return hit;
}

Renderer::Pass Renderer::run_pass(ad::Tape& tape, const FieldNetwork& net, const ad::Tensor& particles,
                                  const std::shared_ptr<const SpatialHash>& hash, std::span<const Ray> rays,
                                  const std::vector<RaySamples>& samples) const {
  enc::SampleQuery query;
  std::vector<std::size_t> offsets{0};
  std::vector<double> delta;
  std::vector<ad::Real> norm_x, dirs;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const auto& s = samples[r];
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Vec3 x = rays[r].at(s.t[i]);
      query.points.push_back(x);
      query.origins.push_back(rays[r].origin);
      query.directions.push_back(rays[r].direction);
      const Vec3 xn = scaling_.normalize_point(x);
      for (int a = 0; a < 3; ++a) {
        norm_x.push_back(static_cast<ad::Real>(xn[a]));
        dirs.push_back(static_cast<ad::Real>(rays[r].direction[a]));
      }
    }
    delta.insert(delta.end(), s.delta.begin(), s.delta.end());
    offsets.push_back(offsets.back() + s.size());
  }
  const std::size_t total = query.size();
  const auto& opts = config_.encoding;
  const auto raw = enc::raw_features(tape, particles, hash, query, search_radius_, opts);
  const auto encoded = enc::encode_batch(tape, raw, scaling_, opts);
  const auto gamma_x = ad::Tensor::from({total, 6 * static_cast<std::size_t>(opts.point_levels)},
                                        ad::positional_encode(norm_x, opts.point_levels));
  const auto gamma_d = ad::Tensor::from({total, 6 * static_cast<std::size_t>(opts.dir_levels)},
                                        ad::positional_encode(dirs, opts.dir_levels));
  const auto field = net.forward(tape, gamma_x, encoded.e_x, gamma_d, encoded.e_d);
  Pass pass;
  pass.color = volume_render(tape, field.sigma, field.color, std::move(delta), std::move(offsets),
                             config_.background, &pass.weights);
  return pass;
}

RayBatchOutput Renderer::render_rays(ad::Tape& tape, const ad::Tensor& particles, std::span<const Ray> rays, Rng* rng,
                                     std::shared_ptr<const SpatialHash> hash) const {
  if (!hash) hash = enc::build_hash(particles, search_radius_);
  std::vector<RaySamples> coarse(rays.size());
  for (std::size_t r = 0; r < rays.size(); ++r) {
    if (auto b = ray_bounds(rays[r])) coarse[r] = stratified_samples(b->first, b->second, config_.n_coarse, rng);
  }
  RayBatchOutput out;
  const Pass cp = run_pass(tape, coarse_, particles, hash, rays, coarse);
  out.coarse = cp.color;
  std::size_t offset = 0;
  for (const auto& s : coarse) {
    out.coarse_weights.emplace_back(cp.weights.begin() + offset, cp.weights.begin() + offset + s.size());
    offset += s.size();
  }
  if (config_.n_fine == 0) {
    out.fine = out.coarse;
    return out;
  }
  std::vector<RaySamples> merged(rays.size());
  for (std::size_t r = 0; r < rays.size(); ++r) {
    if (coarse[r].size() == 0) continue;
    merged[r] = hierarchical_resample(coarse[r], out.coarse_weights[r], config_.n_fine, rng);
  }
  out.fine = run_pass(tape, fine_, particles, hash, rays, merged).color;
  return out;
}

Image Renderer::render_image(std::span<const Vec3> particles, const Camera& camera,
                             const ImageOptions& options) const {
  camera.validate();
  Image img(camera.width, camera.height, config_.background);
  const auto tensor = ad::Tensor::from({particles.size(), 3}, flatten<ad::Real>(particles));
  const auto hash = std::make_shared<const SpatialHash>(particles, search_radius_);
  Rng rng(options.seed);
  std::vector<Ray> rays;
  std::vector<std::pair<int, int>> pixels;
  auto flush = [&] {
    if (rays.empty()) return;
    auto tape = ad::Tape::inference();
    const auto out = render_rays(tape, tensor, rays, options.perturb ? &rng : nullptr, hash);
    for (std::size_t i = 0; i < rays.size(); ++i)
      for (int c = 0; c < 3; ++c)
        img.at(pixels[i].first, pixels[i].second, c) = static_cast<float>(out.fine.at(i, static_cast<std::size_t>(c)));
    rays.clear();
    pixels.clear();
  };
  for (int v = 0; v < camera.height; ++v)
    for (int u = 0; u < camera.width; ++u) {
      rays.push_back(generate_ray(camera, u, v));
      pixels.emplace_back(u, v);
      if (rays.size() >= std::max<std::size_t>(options.chunk, 1)) flush();
    }
  flush();
  return img;
}

ad::NamedTensors Renderer::parameters() const {
  auto out = coarse_.parameters();
  auto fine = fine_.parameters();
  out.insert(out.end(), fine.begin(), fine.end());
  return out;
}

}  // namespace fg::render
