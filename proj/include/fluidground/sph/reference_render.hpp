#pragma once

#include <string_view>

#include "fluidground/geometry/camera.hpp"
#include "fluidground/geometry/types.hpp"
#include "fluidground/io/image.hpp"

namespace fg::sph {

/// Analytic fields used to produce observation images:
/// σ(x) = k_σ σ_p(x), c(x, d) = base ⊙ (1 - tint · max(0, d · d_c)).
struct AppearanceModel {
  double density_gain = 0.03;  // k_σ
  Vec3 base_color = Vec3(0.2, 0.45, 0.85);
  double view_tint_gain = 0.3;
  Vec3 background_color = Vec3(1, 1, 1);
  double search_radius_factor = 9.0;  // r_s = factor * r_p, as in the learned renderer
  double step_factor = 0.5;           // quadrature step = factor * r_p

  void validate() const;
};

/// Water renders blue, honey amber; keyed by the preset's rest density.
AppearanceModel appearance_for_density(double rest_density);

/// Midpoint quadrature with a fixed step measured from the camera origin, over
/// the part of each ray within r_s of the particles' bounding box.
Image render_reference(const ParticleState& state, const Camera& camera, const AppearanceModel& appearance);

}  // namespace fg::sph
