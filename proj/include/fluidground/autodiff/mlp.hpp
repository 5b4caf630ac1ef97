#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluidground/autodiff/tensor.hpp"

namespace fg::ad {

enum class Activation { ReLU, Sigmoid, Tanh, None };

struct MlpSpec {
  /// Input width followed by the output width of every layer.
  std::vector<std::size_t> layer_widths;
  /// One entry per layer (layer_widths.size() - 1).
  std::vector<Activation> activations;
  std::uint64_t seed = 0;
  /// Layer index whose input is concatenated with the network input.
  std::optional<std::size_t> skip_layer;
  /// Zero the final layer's weights so the network starts as the zero map.
  bool zero_init_output = false;

  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
  std::size_t layer_count() const { return layer_widths.size() - 1; }
  std::size_t fan_in(std::size_t layer) const;
  void validate() const;
};

/// Fully connected network; weights stored [fan_in, fan_out] so a batch of
/// row vectors multiplies on the right.
class Mlp {
 public:
  Mlp() = default;
  /// He-style uniform fan-in initialization from spec.seed, zero biases.
  Mlp(MlpSpec spec, std::string name);

  Tensor forward(Tape& tape, const Tensor& input) const;

  const MlpSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  /// Handles to the live parameter tensors, named "<name>/layer<i>/{weight,bias}".
  NamedTensors parameters() const;
  Tensor& weight(std::size_t layer) { return weights_.at(layer); }
  Tensor& bias(std::size_t layer) { return biases_.at(layer); }
  const Tensor& weight(std::size_t layer) const { return weights_.at(layer); }
  const Tensor& bias(std::size_t layer) const { return biases_.at(layer); }

 private:
  MlpSpec spec_;
  std::string name_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

}  // namespace fg::ad
