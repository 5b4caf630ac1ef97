#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fluidground/geometry/trajectory.hpp"
#include "fluidground/transition/model.hpp"

namespace fg::transition {

struct PretrainOptions {
  int epochs = 10;
  double lr = 1e-3;
  /// Samples whose gradients are summed per Adam step; 0 uses every frame (full batch).
  int batch_size = 1;
  /// Start frames used per epoch; empty means every frame with two successors.
  std::vector<int> frames;
  std::uint64_t seed = 11;
};

struct PretrainReport {
  std::vector<double> epoch_loss;  // mean training loss of each epoch
};

/// Model input at frame t: positions x_t and velocities (x_t - x_{t-1}) / dt,
/// or the stored velocities at t = 0.
ParticleState model_input(const Trajectory& trajectory, std::size_t frame, double dt);

/// Supervised training on an oracle trajectory: each sample sums the mean
/// per-particle distance of the one- and two-step predictions to the oracle
/// (index-matched). Frames are shuffled per epoch and grouped into batches,
/// with one Adam step on the mean loss of each batch.
PretrainReport pretrain_on_oracle(TransitionModel& model, const Trajectory& trajectory, const PretrainOptions& options,
                                  const std::function<void(int epoch, double loss)>& on_epoch = {});

/// Mean per-particle distance between one-step predictions and the oracle over `frames`.
double one_step_error(const TransitionModel& model, const Trajectory& trajectory, const std::vector<int>& frames);

}  // namespace fg::transition
