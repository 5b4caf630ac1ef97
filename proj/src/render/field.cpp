#include "fluidground/render/field.hpp"

#include <vector>

#include "fluidground/autodiff/ops.hpp"
#include "fluidground/errors.hpp"

namespace fg::render {

using ad::Activation;
using ad::MlpSpec;

void FieldConfig::validate() const {
  if (depth < 1 || width < 1 || color_width < 1) throw ConfigError("field: depth and widths must be >= 1");
  if (skip_layer && (*skip_layer == 0 || *skip_layer >= depth)) {
    throw ConfigError("field: skip_layer must lie in [1, depth)");
  }
}

FieldNetwork::FieldNetwork(const FieldConfig& config, const enc::EncodingOptions& encoding, std::string name,
                           std::uint64_t seed)
    : config_(config), name_(std::move(name)) {
  config.validate();
  encoding.validate();
  const std::size_t gx = 2 * static_cast<std::size_t>(encoding.point_levels) * 3;
  const std::size_t gd = 2 * static_cast<std::size_t>(encoding.dir_levels) * 3;

  MlpSpec trunk;
  trunk.layer_widths.push_back(gx + encoding.ex_width());
  for (std::size_t l = 0; l < config.depth; ++l) {
    trunk.layer_widths.push_back(config.width);
    trunk.activations.push_back(Activation::ReLU);
  }
  trunk.skip_layer = config.skip_layer;
  trunk.seed = seed;
  trunk_ = ad::Mlp(trunk, name_ + "/trunk");

  sigma_head_ = ad::Mlp(MlpSpec{{config.width, 1}, {Activation::None}, seed + 1, {}, false}, name_ + "/sigma");
  feature_head_ =
      ad::Mlp(MlpSpec{{config.width, config.width}, {Activation::None}, seed + 2, {}, false}, name_ + "/feature");
  color_head_ = ad::Mlp(MlpSpec{{config.width + gd + encoding.ed_width(), config.color_width, 3},
                                {Activation::ReLU, Activation::Sigmoid},
                                seed + 3,
                                {},
                                false},
                        name_ + "/color");
}

FieldNetwork::Output FieldNetwork::forward(ad::Tape& tape, const ad::Tensor& gamma_x, const ad::Tensor& e_x,
                                           const ad::Tensor& gamma_d, const ad::Tensor& e_d) const {
  const std::vector<ad::Tensor> position{gamma_x, e_x};
  const auto h = trunk_.forward(tape, ad::concat_cols(tape, position));
  Output out;
  out.sigma = ad::softplus(tape, sigma_head_.forward(tape, h), static_cast<ad::Real>(config_.density_shift));
  const std::vector<ad::Tensor> view{feature_head_.forward(tape, h), gamma_d, e_d};
  out.color = color_head_.forward(tape, ad::concat_cols(tape, view));
  return out;
}

ad::NamedTensors FieldNetwork::parameters() const {
  ad::NamedTensors out;
  for (const auto* m : {&trunk_, &sigma_head_, &feature_head_, &color_head_}) {
    auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace fg::render
