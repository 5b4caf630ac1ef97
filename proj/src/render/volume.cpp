#include "fluidground/render/volume.hpp"

#include <cmath>
#include <string>

#include "fluidground/errors.hpp"

namespace fg::render {

using ad::Real;

Composite composite(std::span<const double> sigma, std::span<const Vec3> color, std::span<const double> delta,
                    const Vec3& background) {
  if (sigma.size() != color.size() || sigma.size() != delta.size()) {
    throw DimensionError("compositing needs one sigma, color and interval per sample");
  }
  Composite out;
  out.weights.resize(sigma.size());
  double optical_depth = 0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double t = std::exp(-optical_depth);
    const double tau = sigma[i] * delta[i];
    out.weights[i] = t * -std::expm1(-tau);
    out.color += out.weights[i] * color[i];
    optical_depth += tau;
  }
  out.transmittance = std::exp(-optical_depth);
  out.color += out.transmittance * background;
  return out;
}

ad::Tensor volume_render(ad::Tape& tape, const ad::Tensor& sigma, const ad::Tensor& color, std::vector<double> delta,
                         std::vector<std::size_t> ray_offsets, const Vec3& background, std::vector<double>* weights) {
  const std::size_t s_count = sigma.size();
  if (sigma.rows() != s_count || color.rows() != s_count || color.cols() != 3 || delta.size() != s_count) {
    throw DimensionError("volume_render: sigma " + ad::shape_string(sigma.shape()) + ", color " +
                         ad::shape_string(color.shape()) + ", " + std::to_string(delta.size()) + " intervals");
  }
  if (ray_offsets.empty() || ray_offsets.front() != 0 || ray_offsets.back() != s_count) {
    throw DimensionError("volume_render: ray offsets must span all samples");
  }
  const std::size_t rays = ray_offsets.size() - 1;
  std::vector<Real> out(rays * 3);
  std::vector<double> w(s_count);
  // Transmittance after each sample, T_{i+1}.
  std::vector<double> t_after(s_count);
  std::vector<double> t_final(rays);
  const auto sv = sigma.values();
  const auto cv = color.values();
  for (std::size_t r = 0; r < rays; ++r) {
    double depth = 0;
    Vec3 c = Vec3::Zero();
    for (std::size_t i = ray_offsets[r]; i < ray_offsets[r + 1]; ++i) {
      const double t = std::exp(-depth);
      const double tau = static_cast<double>(sv[i]) * delta[i];
      w[i] = t * -std::expm1(-tau);
      c += w[i] * Vec3(cv[3 * i], cv[3 * i + 1], cv[3 * i + 2]);
      depth += tau;
      t_after[i] = std::exp(-depth);
    }
    t_final[r] = std::exp(-depth);
    c += t_final[r] * background;
    for (int a = 0; a < 3; ++a) out[3 * r + a] = static_cast<Real>(c[a]);
  }
  if (weights) *weights = w;

  return tape.record(
      {rays, 3}, std::move(out), {&sigma, &color},
      [sigma, color, delta = std::move(delta), offsets = std::move(ray_offsets), w = std::move(w),
       t_after = std::move(t_after), t_final = std::move(t_final), background](const ad::detail::Node& o) {
        const auto cv = color.values();
        std::vector<Real> gs(sigma.size(), Real(0)), gc(color.size(), Real(0));
        for (std::size_t r = 0; r + 1 < offsets.size(); ++r) {
          const Vec3 g(o.grad[3 * r], o.grad[3 * r + 1], o.grad[3 * r + 2]);
          // Walk back to front keeping S_i = Σ_{j>i} w_j c_j + T_{S+1} background.
          Vec3 behind = t_final[r] * background;
          for (std::size_t i = offsets[r + 1]; i-- > offsets[r];) {
            const Vec3 c(cv[3 * i], cv[3 * i + 1], cv[3 * i + 2]);
            for (int a = 0; a < 3; ++a) gc[3 * i + a] = static_cast<Real>(w[i] * g[a]);
            gs[i] = static_cast<Real>(delta[i] * g.dot(t_after[i] * c - behind));
            behind += w[i] * c;
          }
        }
        ad::accumulate_grad(sigma, gs);
        ad::accumulate_grad(color, gc);
      });
}

}  // namespace fg::render
