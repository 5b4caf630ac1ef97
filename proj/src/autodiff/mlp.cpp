#include "fluidground/autodiff/mlp.hpp"

#include <cmath>
#include <random>

#include "fluidground/autodiff/ops.hpp"
#include "fluidground/errors.hpp"

namespace fg::ad {

std::size_t MlpSpec::fan_in(std::size_t layer) const {
  auto w = layer_widths.at(layer);
  if (skip_layer && *skip_layer == layer && layer > 0) w += layer_widths.front();
  return w;
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) throw ConfigError("MLP needs an input width and at least one layer");
  for (auto w : layer_widths)
    if (w == 0) throw ConfigError("MLP layer widths must be positive");
  if (activations.size() != layer_count()) {
    throw ConfigError("MLP has " + std::to_string(layer_count()) + " layers but " +
                      std::to_string(activations.size()) + " activations");
  }
  if (skip_layer && (*skip_layer == 0 || *skip_layer >= layer_count())) {
    throw ConfigError("MLP skip layer must name a hidden layer");
  }
}

Mlp::Mlp(MlpSpec spec, std::string name) : spec_(std::move(spec)), name_(std::move(name)) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
    const auto in = spec_.fan_in(l), out = spec_.layer_widths[l + 1];
    const bool zero = spec_.zero_init_output && l + 1 == spec_.layer_count();
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<Real> w(in * out);
    for (auto& v : w) v = zero ? Real(0) : static_cast<Real>(dist(rng));
    weights_.push_back(Tensor::parameter({in, out}, std::move(w)));
    biases_.push_back(Tensor::parameter({out}, std::vector<Real>(out, Real(0))));
  }
}

Tensor Mlp::forward(Tape& tape, const Tensor& input) const {
  if (weights_.empty()) throw UsageError("forward on an uninitialized MLP");
  if (input.cols() != spec_.input_width()) {
    throw DimensionError("MLP '" + name_ + "' expects width " + std::to_string(spec_.input_width()) +
                         ", got " + shape_string(input.shape()));
  }
  Tensor h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (spec_.skip_layer && *spec_.skip_layer == l) {
      const Tensor parts[] = {h, input};
      h = concat_cols(tape, parts);
    }
    h = linear(tape, h, weights_[l], biases_[l]);
    switch (spec_.activations[l]) {
      case Activation::ReLU: h = relu(tape, h); break;
      case Activation::Sigmoid: h = sigmoid(tape, h); break;
      case Activation::Tanh: h = ad::tanh(tape, h); break;
      case Activation::None: break;
    }
  }
  return h;
}

NamedTensors Mlp::parameters() const {
  NamedTensors out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto base = name_ + "/layer" + std::to_string(l);
    out.emplace_back(base + "/weight", weights_[l]);
    out.emplace_back(base + "/bias", biases_[l]);
  }
  return out;
}

}  // namespace fg::ad
