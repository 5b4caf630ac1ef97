#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fg::train {

/// Multiply the learning rate by `factor` once `step` is reached.
struct DecayEvent {
  int step = 0;
  double factor = 0.5;
};

/// Learning rate of one optimizer over a phase: lr * Π(events reached) * gamma^(step / horizon).
struct ComponentSchedule {
  double lr = 5e-4;
  std::vector<DecayEvent> decay;
  double exp_gamma = 1.0;  // 1 disables the exponential term
  int exp_horizon = 0;     // steps over which the exponential term reaches gamma

  double lr_at(int step) const;
  void validate(const std::string& path) const;
};

struct TrainSchedule {
  int warmup_steps = 20000;
  int joint_steps = 50000;
  int rays_per_batch = 512;
  ComponentSchedule warmup_renderer;
  ComponentSchedule joint_renderer;
  ComponentSchedule joint_transition;
  /// Steps of the rollout recorded for backpropagation; 0 keeps the full horizon.
  int bptt_window = 0;
  /// Sweep t = 1, 2, ... in order instead of sampling it uniformly.
  bool sequential_time = false;
  /// Jitter strata while training.
  bool perturb = true;
  int checkpoint_every = 1000;
  int log_every = 1;

  /// 20k warm-up and 50k joint steps with decay events shrunk in proportion.
  static TrainSchedule desk();
  /// The full-length schedule: 100k warm-up, 500k joint.
  static TrainSchedule full();
  void validate() const;
};

}  // namespace fg::train
