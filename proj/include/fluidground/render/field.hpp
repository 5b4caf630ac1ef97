#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fluidground/autodiff/mlp.hpp"
#include "fluidground/encoding/neighborhood.hpp"

namespace fg::render {

struct FieldConfig {
  std::size_t depth = 8;
  std::size_t width = 256;
  /// Trunk layer that re-reads the trunk input; nullopt disables the skip.
  std::optional<std::size_t> skip_layer = 4;
  std::size_t color_width = 128;
  /// σ = softplus(h + density_shift).
  double density_shift = -1.0;

  void validate() const;
};

/// Radiance field conditioned on neighborhood encodings. Density reads
/// (Γ(x), e_x) only; color additionally reads (Γ(d), e_d).
class FieldNetwork {
 public:
  FieldNetwork() = default;
  FieldNetwork(const FieldConfig& config, const enc::EncodingOptions& encoding, std::string name, std::uint64_t seed);

  struct Output {
    ad::Tensor sigma;  // [S, 1], >= 0
    ad::Tensor color;  // [S, 3], in (0, 1)
  };
  Output forward(ad::Tape& tape, const ad::Tensor& gamma_x, const ad::Tensor& e_x, const ad::Tensor& gamma_d,
                 const ad::Tensor& e_d) const;

  ad::NamedTensors parameters() const;
  const FieldConfig& config() const { return config_; }
  std::size_t position_width() const { return trunk_.spec().input_width(); }

 private:
  FieldConfig config_;
  std::string name_;
  ad::Mlp trunk_;
  ad::Mlp sigma_head_;
  ad::Mlp feature_head_;
  ad::Mlp color_head_;
};

}  // namespace fg::render
