#include "fluidground/train/schedule.hpp"

#include <cmath>

#include "fluidground/errors.hpp"

namespace fg::train {

double ComponentSchedule::lr_at(int step) const {
  double lr_now = lr;
  for (const auto& e : decay)
    if (step >= e.step) lr_now *= e.factor;
  if (exp_gamma != 1.0 && exp_horizon > 0) lr_now *= std::pow(exp_gamma, static_cast<double>(step) / exp_horizon);
  return lr_now;
}

void ComponentSchedule::validate(const std::string& path) const {
  if (!(lr >= 0)) throw ConfigError(path + ".lr must be >= 0");
  for (std::size_t i = 0; i < decay.size(); ++i) {
    const auto& e = decay[i];
    const std::string at = path + ".decay[" + std::to_string(i) + "]";
    if (e.step < 0) throw ConfigError(at + ".step must be >= 0");
    if (!(e.factor > 0 && e.factor <= 1)) throw ConfigError(at + ".factor must lie in (0, 1]");
  }
  if (!(exp_gamma > 0 && exp_gamma <= 1)) throw ConfigError(path + ".exp_gamma must lie in (0, 1]");
  if (exp_horizon < 0) throw ConfigError(path + ".exp_horizon must be >= 0");
}

namespace {

std::vector<DecayEvent> halvings(std::initializer_list<int> steps) {
  std::vector<DecayEvent> out;
  for (int s : steps) out.push_back({s, 0.5});
  return out;
}

}  // namespace

TrainSchedule TrainSchedule::full() {
  TrainSchedule s;
  s.warmup_steps = 100000;
  s.joint_steps = 500000;
  s.rays_per_batch = 1024;
  s.warmup_renderer = {5e-4, {}, 0.1, 100000};
  s.joint_renderer = {5e-4, halvings({10000, 75000, 150000}), 1.0, 0};
  s.joint_transition = {1e-6, halvings({10000, 30000, 50000, 100000, 300000}), 1.0, 0};
  return s;
}

TrainSchedule TrainSchedule::desk() {
  TrainSchedule s;
  s.warmup_steps = 20000;
  s.joint_steps = 50000;
  s.rays_per_batch = 512;
  s.warmup_renderer = {5e-4, {}, 0.1, 20000};
  s.joint_renderer = {5e-4, halvings({1000, 7500, 15000}), 1.0, 0};
  s.joint_transition = {1e-6, halvings({1000, 3000, 5000, 10000, 30000}), 1.0, 0};
  return s;
}

void TrainSchedule::validate() const {
  if (warmup_steps < 0 || joint_steps < 0) throw ConfigError("schedule: step counts must be >= 0");
  if (rays_per_batch < 1) throw ConfigError("schedule.rays_per_batch must be >= 1");
  warmup_renderer.validate("schedule.warmup_renderer");
  joint_renderer.validate("schedule.joint_renderer");
  joint_transition.validate("schedule.joint_transition");
  if (bptt_window < 0) throw ConfigError("schedule.bptt_window must be >= 0");
  if (checkpoint_every < 1) throw ConfigError("schedule.checkpoint_every must be >= 1");
  if (log_every < 1) throw ConfigError("schedule.log_every must be >= 1");
}

}  // namespace fg::train
