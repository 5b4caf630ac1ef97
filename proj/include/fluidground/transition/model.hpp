#pragma once

#include <cstdint>
#include <vector>

#include "fluidground/autodiff/mlp.hpp"
#include "fluidground/geometry/trajectory.hpp"
#include "fluidground/geometry/types.hpp"
#include "fluidground/sph/preset.hpp"
#include "fluidground/transition/conv.hpp"

namespace fg::transition {

struct TransitionConfig {
  Vec3 gravity = Vec3(0, 0, -9.81);
  double dt = 1.0 / 50.0;
  double particle_radius = 0.05;
  Box box{Vec3(-0.8, -0.8, 0.0), Vec3(0.8, 0.8, 1.6)};

  double conv_radius_factor = 4.5;  // R = factor * r_p
  std::size_t channels = 8;         // aggregate channels C
  std::vector<std::size_t> kernel_hidden{16};
  std::vector<std::size_t> output_hidden{32, 32};
  double aggregate_scale = 0.125;   // aggregates are multiplied by this before the output MLP
  double correction_scale = 1.0;    // Δx = correction_scale * r_p * MLP_out
  double max_correction = 2.0;      // per-step |Δx| bound, multiples of r_p
  bool box_clamp = true;            // keep particles r_p inside the box walls
  double divergence_factor = 10.0;  // abort when any |x| exceeds this times the box diagonal
  std::uint64_t seed = 7;

  /// Physics terms (gravity, dt, r_p, box) taken from an oracle preset.
  static TransitionConfig for_preset(const sph::FluidPreset& preset);
  double conv_radius() const { return conv_radius_factor * particle_radius; }
  void validate() const;
};

/// Feature width per neighbor: (1, v* dt / r_p, is_boundary).
inline constexpr std::size_t kNeighborFeatures = 5;

struct StepStats {
  std::size_t clamped_corrections = 0;
  std::size_t pairs = 0;
};

/// Differentiable particle state: fluid positions and velocities [N, 3].
struct StateTensors {
  Tensor x;
  Tensor v;
};

StateTensors to_tensors(const ParticleState& state);
/// Copies tensor values back into `like` (boundary and radius are kept).
ParticleState to_state(const StateTensors& s, const ParticleState& like);

/// Ballistic advection plus a continuous-convolution position correction:
///   v* = v + dt g, x* = x + dt v*, x' = x* + Δx(x*, v*), v' = (x' - x) / dt.
class TransitionModel {
 public:
  TransitionModel() = default;
  explicit TransitionModel(TransitionConfig config);

  const TransitionConfig& config() const { return config_; }

  /// Δx for every fluid particle. Zero aggregates give Δx = 0 exactly.
  Tensor correction(Tape& tape, const Tensor& x_star, const Tensor& v_star, std::span<const Vec3> boundary,
                    StepStats* stats = nullptr) const;

  StateTensors step(Tape& tape, const StateTensors& s, std::span<const Vec3> boundary,
                    StepStats* stats = nullptr) const;
  ParticleState step(const ParticleState& state, StepStats* stats = nullptr) const;

  /// Returns n_steps + 1 states including the initial one. Only the last
  /// `bptt_window` steps are recorded on the tape (0 records every step).
  /// Throws DivergenceError naming the step that left the divergence bound.
  std::vector<StateTensors> rollout(Tape& tape, const StateTensors& initial, std::span<const Vec3> boundary,
                                    int n_steps, int bptt_window = 0, StepStats* stats = nullptr) const;
  std::vector<ParticleState> rollout(const ParticleState& initial, int n_steps, StepStats* stats = nullptr) const;

  /// Parameters named "transition/kernel/..." and "transition/output/...".
  ad::NamedTensors parameters() const;
  ad::Mlp& kernel_net() { return kernel_; }
  ad::Mlp& output_net() { return output_; }

 private:
  void check_divergence(const Tensor& x, int step_index) const;

  TransitionConfig config_;
  ad::Mlp kernel_;
  ad::Mlp output_;
};

/// Ballistic half of a step: v* = v + dt g, x* = x + dt v*.
ParticleState advect(const ParticleState& state, const Vec3& gravity, double dt);

}  // namespace fg::transition
