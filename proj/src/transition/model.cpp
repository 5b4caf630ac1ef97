#include "fluidground/transition/model.hpp"

#include <cmath>
#include <string>

#include "fluidground/autodiff/ops.hpp"
#include "fluidground/errors.hpp"

namespace fg::transition {

TransitionConfig TransitionConfig::for_preset(const sph::FluidPreset& preset) {
  TransitionConfig c;
  c.gravity = preset.gravity;
  c.dt = preset.dt;
  c.particle_radius = preset.particle_radius;
  c.box = preset.box;
  return c;
}

void TransitionConfig::validate() const {
  if (!(dt > 0)) throw ConfigError("transition.dt must be positive");
  if (!(particle_radius > 0)) throw ConfigError("transition.particle_radius must be positive");
  if (!gravity.allFinite()) throw ConfigError("transition.gravity must be finite");
  if (!(box.hi.array() > box.lo.array() + 2 * particle_radius).all()) {
    throw ConfigError("transition.box must be wider than two particle radii on every axis");
  }
  if (!(conv_radius_factor > 0)) throw ConfigError("transition.conv_radius_factor must be positive");
  if (channels < 1) throw ConfigError("transition.channels must be >= 1");
  if (kernel_hidden.empty() || output_hidden.empty()) throw ConfigError("transition MLPs need a hidden layer");
  for (auto w : kernel_hidden)
    if (w < 1) throw ConfigError("transition.kernel_hidden widths must be positive");
  for (auto w : output_hidden)
    if (w < 1) throw ConfigError("transition.output_hidden widths must be positive");
  if (!(aggregate_scale > 0) || !(correction_scale > 0)) throw ConfigError("transition scales must be positive");
  if (!(max_correction > 0)) throw ConfigError("transition.max_correction must be positive");
  if (!(divergence_factor > 1)) throw ConfigError("transition.divergence_factor must exceed 1");
}

StateTensors to_tensors(const ParticleState& state) {
  const std::size_t n = state.positions.size();
  return {Tensor::from({n, 3}, flatten<Real>(state.positions)), Tensor::from({n, 3}, flatten<Real>(state.velocities))};
}

ParticleState to_state(const StateTensors& s, const ParticleState& like) {
  ParticleState out;
  out.particle_radius = like.particle_radius;
  out.boundary_positions = like.boundary_positions;
  out.positions = unflatten<Real>(s.x.values());
  out.velocities = unflatten<Real>(s.v.values());
  return out;
}

ParticleState advect(const ParticleState& state, const Vec3& gravity, double dt) {
  if (!(dt > 0)) throw UsageError("advect: dt must be positive");
  ParticleState out = state;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.velocities[i] = state.velocities[i] + dt * gravity;
    out.positions[i] = state.positions[i] + dt * out.velocities[i];
  }
  return out;
}

TransitionModel::TransitionModel(TransitionConfig config) : config_(std::move(config)) {
  config_.validate();
  ad::MlpSpec k;
  k.layer_widths = {3};
  for (auto w : config_.kernel_hidden) {
    k.layer_widths.push_back(w);
    k.activations.push_back(ad::Activation::Tanh);
  }
  k.layer_widths.push_back(config_.channels * kNeighborFeatures);
  k.activations.push_back(ad::Activation::None);
  k.seed = config_.seed;
  kernel_ = ad::Mlp(k, "transition/kernel");

  ad::MlpSpec o;
  o.layer_widths = {config_.channels};
  for (auto w : config_.output_hidden) {
    o.layer_widths.push_back(w);
    o.activations.push_back(ad::Activation::Tanh);
  }
  o.layer_widths.push_back(3);
  o.activations.push_back(ad::Activation::None);
  o.seed = config_.seed + 1;
  o.zero_init_output = true;
  output_ = ad::Mlp(o, "transition/output");
}

ad::NamedTensors TransitionModel::parameters() const {
  auto out = kernel_.parameters();
  auto more = output_.parameters();
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

Tensor TransitionModel::correction(Tape& tape, const Tensor& x_star, const Tensor& v_star,
                                   std::span<const Vec3> boundary, StepStats* stats) const {
  const std::size_t n = x_star.rows();
  const double radius = config_.conv_radius();
  const auto fluid = unflatten<Real>(x_star.values());
  const auto pairs = build_pairs(fluid, boundary, radius);

  const Tensor offsets = pair_offsets(tape, x_star, boundary, pairs, radius);
  const Tensor weights = window(tape, offsets);
  const Tensor kernel = kernel_.forward(tape, offsets);

  // Neighbor features: fluid rows (1, v* dt / r_p, 0), boundary rows (1, 0, 0, 0, 1).
  const Real vs = static_cast<Real>(config_.dt / config_.particle_radius);
  const Tensor fluid_cols[] = {Tensor::full({n, 1}, 1), ad::scale(tape, v_star, vs), Tensor::zeros({n, 1})};
  const Tensor fluid_features = ad::concat_cols(tape, fluid_cols);
  std::vector<Real> boundary_rows;
  boundary_rows.reserve(boundary.size() * kNeighborFeatures);
  for (std::size_t b = 0; b < boundary.size(); ++b) boundary_rows.insert(boundary_rows.end(), {1, 0, 0, 0, 1});
  const Tensor rows[] = {fluid_features, Tensor::from({boundary.size(), kNeighborFeatures}, std::move(boundary_rows))};
  const Tensor features = ad::concat_rows(tape, rows);

  const Tensor agg = ad::scale(tape, aggregate(tape, kernel, weights, features, pairs),
                               static_cast<Real>(config_.aggregate_scale));
  const Tensor bias_path = output_.forward(tape, Tensor::zeros({1, config_.channels}));
  const Tensor out = sub_row(tape, output_.forward(tape, agg), bias_path);
  const Tensor dx = ad::scale(tape, out, static_cast<Real>(config_.correction_scale * config_.particle_radius));
  std::size_t clamped = 0;
  const Tensor bounded =
      clamp_row_norms(tape, dx, static_cast<Real>(config_.max_correction * config_.particle_radius), &clamped);
  if (stats) {
    stats->clamped_corrections += clamped;
    stats->pairs += pairs->size();
  }
  return bounded;
}

StateTensors TransitionModel::step(Tape& tape, const StateTensors& s, std::span<const Vec3> boundary,
                                   StepStats* stats) const {
  if (s.x.rank() != 2 || s.x.cols() != 3 || s.v.shape() != s.x.shape()) {
    throw DimensionError("transition state must be two [N, 3] tensors");
  }
  const Real dt = static_cast<Real>(config_.dt);
  const std::vector<Real> ones(3, Real(1));
  std::vector<Real> dv(3);
  for (int a = 0; a < 3; ++a) dv[a] = static_cast<Real>(config_.dt * config_.gravity[a]);
  const Tensor v_star = ad::affine_cols(tape, s.v, ones, dv);
  const Tensor x_star = ad::add(tape, s.x, ad::scale(tape, v_star, dt));
  Tensor x_next = ad::add(tape, x_star, correction(tape, x_star, v_star, boundary, stats));
  if (config_.box_clamp) {
    std::vector<Real> lo(3), hi(3);
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<Real>(config_.box.lo[a] + config_.particle_radius);
      hi[a] = static_cast<Real>(config_.box.hi[a] - config_.particle_radius);
    }
    x_next = ad::clamp_cols(tape, x_next, lo, hi);
  }
  const Tensor v_next = ad::scale(tape, ad::sub(tape, x_next, s.x), Real(1) / dt);
  return {x_next, v_next};
}

ParticleState TransitionModel::step(const ParticleState& state, StepStats* stats) const {
  Tape tape = Tape::inference();
  return to_state(step(tape, to_tensors(state), state.boundary_positions, stats), state);
}

void TransitionModel::check_divergence(const Tensor& x, int step_index) const {
  const double bound = config_.divergence_factor * config_.box.diagonal();
  for (auto v : x.values()) {
    if (!std::isfinite(static_cast<double>(v)) || std::abs(static_cast<double>(v)) > bound) {
      throw DivergenceError("transition rollout diverged at step " + std::to_string(step_index));
    }
  }
}

std::vector<StateTensors> TransitionModel::rollout(Tape& tape, const StateTensors& initial,
                                                   std::span<const Vec3> boundary, int n_steps, int bptt_window,
                                                   StepStats* stats) const {
  if (n_steps < 1) throw UsageError("rollout needs n_steps >= 1");
  if (bptt_window < 0) throw UsageError("bptt_window must be >= 0");
  const int first_recorded = bptt_window == 0 ? 0 : std::max(0, n_steps - bptt_window);
  std::vector<StateTensors> states{initial};
  states.reserve(static_cast<std::size_t>(n_steps) + 1);
  Tape untracked = Tape::inference();
  for (int t = 0; t < n_steps; ++t) {
    StateTensors next;
    if (t < first_recorded) {
      next = step(untracked, states.back(), boundary, stats);
      next = {next.x.detach(), next.v.detach()};
    } else {
      next = step(tape, states.back(), boundary, stats);
    }
    check_divergence(next.x, t + 1);
    states.push_back(next);
  }
  return states;
}

std::vector<ParticleState> TransitionModel::rollout(const ParticleState& initial, int n_steps, StepStats* stats) const {
  Tape tape = Tape::inference();
  const auto states = rollout(tape, to_tensors(initial), initial.boundary_positions, n_steps, 0, stats);
  std::vector<ParticleState> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(to_state(s, initial));
  return out;
}

}  // namespace fg::transition
