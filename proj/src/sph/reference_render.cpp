#include "fluidground/sph/reference_render.hpp"

#include <cmath>
#include <string>

#include "fluidground/errors.hpp"
#include "fluidground/geometry/spatial_hash.hpp"
#include "fluidground/render/volume.hpp"

namespace fg::sph {

void AppearanceModel::validate() const {
  auto in_unit = [](const Vec3& c) { return (c.array() >= 0).all() && (c.array() <= 1).all(); };
  if (!(density_gain >= 0)) throw ConfigError("appearance.density_gain must be >= 0");
  if (!in_unit(base_color)) throw ConfigError("appearance.base_color must lie in [0, 1]^3");
  if (!in_unit(background_color)) throw ConfigError("appearance.background_color must lie in [0, 1]^3");
  if (!(view_tint_gain >= 0 && view_tint_gain <= 1)) throw ConfigError("appearance.view_tint_gain must lie in [0, 1]");
  if (!(search_radius_factor > 0)) throw ConfigError("appearance.search_radius_factor must be positive");
  if (!(step_factor > 0)) throw ConfigError("appearance.step_factor must be positive");
}

AppearanceModel appearance_for_density(double rest_density) {
  AppearanceModel m;
  if (rest_density > 1200) m.base_color = Vec3(0.85, 0.55, 0.1);
  return m;
}

Image render_reference(const ParticleState& state, const Camera& camera, const AppearanceModel& appearance) {
  appearance.validate();
  camera.validate();
  Image image(camera.width, camera.height, appearance.background_color);
  if (state.positions.empty() || appearance.density_gain == 0) return image;

  const double r_s = appearance.search_radius_factor * state.particle_radius;
  const double step = appearance.step_factor * state.particle_radius;
  Box support{state.positions.front(), state.positions.front()};
  for (const auto& p : state.positions) {
    support.lo = support.lo.cwiseMin(p);
    support.hi = support.hi.cwiseMax(p);
  }
  support.lo.array() -= r_s;
  support.hi.array() += r_s;
  const SpatialHash hash(state.positions, r_s);

  std::vector<double> sigma, delta;
  std::vector<Vec3> color;
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Ray ray = generate_ray(camera, u, v);
      const auto hit = intersect_box(ray, support);
      if (!hit) continue;
      const auto k0 = static_cast<long>(std::floor(hit->first / step));
      const auto k1 = static_cast<long>(std::ceil(hit->second / step));
      sigma.clear();
      delta.clear();
      color.clear();
      for (long k = std::max(k0, 0L); k < k1; ++k) {
        const Vec3 x = ray.at((static_cast<double>(k) + 0.5) * step);
        double s = 0;
        Vec3 weighted = Vec3::Zero();
        std::size_t count = 0;
        hash.for_each_in_ball(x, r_s, [&](std::uint32_t, const Vec3& p) {
          const double w = neighbor_weight(p - x, r_s);
          s += w;
          weighted += w * p;
          ++count;
        });
        Vec3 c = appearance.base_color;
        if (count > 0) {
          const Vec3 to_center = weighted / static_cast<double>(count) - ray.origin;
          const double n = to_center.norm();
          const Vec3 d_c = n > 0 ? Vec3(to_center / n) : ray.direction;
          c *= 1.0 - appearance.view_tint_gain * std::max(0.0, ray.direction.dot(d_c));
        }
        sigma.push_back(appearance.density_gain * s);
        delta.push_back(step);
        color.push_back(c);
      }
      image.set(u, v, render::composite(sigma, color, delta, appearance.background_color).color);
    }
  }
  return image;
}

}  // namespace fg::sph
