#pragma once

#include <span>
#include <vector>

#include "fluidground/autodiff/tensor.hpp"

namespace fg::ad {

// Matrix ops treat a tensor as [rows, cols] with cols = product of trailing extents.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// x[n,k] * w[k,m] + b[m]
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, Real s);
Tensor add_scalar(Tape& tape, const Tensor& a, Real s);

Tensor relu(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);
/// log(1 + exp(a + shift))
Tensor softplus(Tape& tape, const Tensor& a, Real shift = 0);
Tensor exp(Tape& tape, const Tensor& a);
Tensor square(Tape& tape, const Tensor& a);
/// bound * tanh(a / bound); smooth elementwise magnitude limit.
Tensor soft_clamp(Tape& tape, const Tensor& a, Real bound);
/// Per-column hard clamp; the gradient is zero where a value was clamped.
Tensor clamp_cols(Tape& tape, const Tensor& a, std::span<const Real> lo, std::span<const Real> hi);

Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);

Tensor reshape(Tape& tape, const Tensor& a, Shape shape);
Tensor concat_cols(Tape& tape, std::span<const Tensor> parts);
Tensor concat_rows(Tape& tape, std::span<const Tensor> parts);
Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t start, std::size_t count);
Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t start, std::size_t count);
/// out[:, c] = a[:, c] * scale[c] + offset[c]
Tensor affine_cols(Tape& tape, const Tensor& a, std::span<const Real> scale,
                   std::span<const Real> offset);

/// Sinusoidal encoding of every component v of `values`:
/// (sin(2^0 pi v), cos(2^0 pi v), ..., sin(2^(L-1) pi v), cos(2^(L-1) pi v)).
std::vector<Real> positional_encode(std::span<const Real> values, int levels);
/// Row-wise encoding of a [n, d] tensor into [n, 2 * levels * d].
Tensor positional_encode(Tape& tape, const Tensor& a, int levels);

}  // namespace fg::ad
