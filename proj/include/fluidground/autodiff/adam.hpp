#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluidground/autodiff/tensor.hpp"

namespace fg::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments. Holds handles to the parameters it
/// updates in place.
class Adam {
 public:
  Adam() = default;
  Adam(NamedTensors params, AdamOptions options);

  /// Applies one update from the current gradients. Every parameter must
  /// carry a gradient; a missing one is a usage error.
  void step();
  /// Drops all parameter gradients.
  void zero_grad();

  double lr() const { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  const AdamOptions& options() const { return options_; }
  std::int64_t step_count() const { return step_count_; }
  const NamedTensors& parameters() const { return params_; }

  /// Moments and step counter as named tensors under `prefix`.
  NamedTensors state(const std::string& prefix) const;
  /// Restores from tensors written by state(); names must match.
  void load_state(const NamedTensors& tensors, const std::string& prefix);

 private:
  NamedTensors params_;
  AdamOptions options_;
  std::int64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace fg::ad
