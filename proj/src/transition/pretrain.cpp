#include "fluidground/transition/pretrain.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fluidground/autodiff/adam.hpp"
#include "fluidground/autodiff/ops.hpp"
#include "fluidground/errors.hpp"
#include "fluidground/random.hpp"

namespace fg::transition {

ParticleState model_input(const Trajectory& trajectory, std::size_t frame, double dt) {
  ParticleState s = trajectory.state(frame);
  if (frame > 0) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      s.velocities[i] = (trajectory.positions[frame][i] - trajectory.positions[frame - 1][i]) / dt;
    }
  }
  return s;
}

namespace {

Tensor target(const Trajectory& trajectory, std::size_t frame) {
  return Tensor::from({trajectory.particle_count(), 3}, flatten<Real>(trajectory.positions[frame]));
}

// Mean per-particle distance; the small epsilon keeps the gradient finite at zero error.
Tensor mean_distance(Tape& tape, const Tensor& predicted, const Tensor& reference, double r_p) {
  return ad::mean(tape, smooth_row_norms(tape, ad::sub(tape, predicted, reference), static_cast<Real>(1e-3 * r_p)));
}

std::vector<int> default_frames(const Trajectory& trajectory) {
  std::vector<int> frames(trajectory.frame_count() >= 3 ? trajectory.frame_count() - 2 : 0);
  std::iota(frames.begin(), frames.end(), 0);
  return frames;
}

}  // namespace

PretrainReport pretrain_on_oracle(TransitionModel& model, const Trajectory& trajectory, const PretrainOptions& options,
                                  const std::function<void(int, double)>& on_epoch) {
  if (options.epochs < 0) throw ConfigError("pretrain.epochs must be >= 0");
  if (!(options.lr > 0)) throw ConfigError("pretrain.lr must be positive");
  if (options.batch_size < 0) throw ConfigError("pretrain.batch_size must be >= 0");
  std::vector<int> frames = options.frames.empty() ? default_frames(trajectory) : options.frames;
  for (int f : frames) {
    if (f < 0 || static_cast<std::size_t>(f) + 2 >= trajectory.frame_count()) {
      throw ConfigError("pretrain frame " + std::to_string(f) + " needs two successor frames");
    }
  }
  if (frames.empty()) throw ConfigError("pretraining needs a trajectory with at least three frames");

  const double dt = model.config().dt, r_p = model.config().particle_radius;
  ad::Adam adam(model.parameters(), {.lr = options.lr});
  PretrainReport report;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(epoch)}));
    std::vector<int> order = frames;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    const std::size_t batch = options.batch_size == 0 ? order.size() : static_cast<std::size_t>(options.batch_size);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      adam.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto frame = static_cast<std::size_t>(order[k]);
        const ParticleState input = model_input(trajectory, frame, dt);
        Tape tape;
        const auto states = model.rollout(tape, to_tensors(input), input.boundary_positions, 2);
        const Tensor loss = ad::add(tape, mean_distance(tape, states[1].x, target(trajectory, frame + 1), r_p),
                                    mean_distance(tape, states[2].x, target(trajectory, frame + 2), r_p));
        total += static_cast<double>(loss.item());
        tape.backward(ad::scale(tape, loss, Real(1) / static_cast<Real>(end - start)));
      }
      adam.step();
    }
    report.epoch_loss.push_back(total / static_cast<double>(order.size()));
    if (on_epoch) on_epoch(epoch, report.epoch_loss.back());
  }
  return report;
}

double one_step_error(const TransitionModel& model, const Trajectory& trajectory, const std::vector<int>& frames) {
  if (frames.empty()) throw UsageError("one_step_error needs at least one frame");
  double total = 0;
  for (int f : frames) {
    if (f < 0 || static_cast<std::size_t>(f) + 1 >= trajectory.frame_count()) {
      throw UsageError("frame " + std::to_string(f) + " has no successor");
    }
    const auto frame = static_cast<std::size_t>(f);
    const ParticleState next = model.step(model_input(trajectory, frame, model.config().dt));
    double acc = 0;
    for (std::size_t i = 0; i < next.size(); ++i) acc += (next.positions[i] - trajectory.positions[frame + 1][i]).norm();
    total += acc / static_cast<double>(next.size());
  }
  return total / static_cast<double>(frames.size());
}

}  // namespace fg::transition
