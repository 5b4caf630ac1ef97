#include "fluidground/autodiff/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "fluidground/errors.hpp"

namespace fg::ad {

namespace {

using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const MatrixR>;

MapC as_matrix(std::span<const Real> data, std::size_t rows, std::size_t cols) {
  return MapC(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Eigen chooses peeling and packet paths from buffer alignment, and vector
// buffers land at arbitrary offsets. Evaluating on Eigen-owned (always
// aligned) copies keeps results bit-identical across allocations.
template <class L, class R>
std::vector<Real> product(const L& lhs, const R& rhs) {
  const MatrixR a = lhs;
  const MatrixR b = rhs;
  MatrixR c(a.rows(), b.cols());
  c.noalias() = a * b;
  return {c.data(), c.data() + c.size()};
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

/// Elementwise unary op with derivative expressed through input and output.
template <class F, class D>
Tensor unary(Tape& tape, const Tensor& a, F f, D dfdx) {
  std::vector<Real> out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return tape.record(a.shape(), std::move(out), {&a}, [a, dfdx](const detail::Node& o) {
    if (!a.requires_grad()) return;
    auto x = a.values();
    std::vector<Real> g(x.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = o.grad[i] * dfdx(x[i], o.value[i]);
    accumulate_grad(a, g);
  });
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  const auto n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  auto out = product(as_matrix(a.values(), n, k), as_matrix(b.values(), k, m));
  return tape.record({n, m}, std::move(out), {&a, &b}, [a, b, n, k, m](const detail::Node& o) {
    auto g = as_matrix(std::span<const Real>(o.grad), n, m);
    if (a.requires_grad()) accumulate_grad(a, product(g, as_matrix(b.values(), k, m).transpose()));
    if (b.requires_grad()) accumulate_grad(b, product(as_matrix(a.values(), n, k).transpose(), g));
  });
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  const auto n = x.rows(), k = x.cols(), m = w.cols();
  if (w.rows() != k || b.size() != m) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + ", weight " +
                         shape_string(w.shape()) + ", bias " + shape_string(b.shape()));
  }
  auto out = product(as_matrix(x.values(), n, k), as_matrix(w.values(), k, m));
  const auto bias = b.values();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] += bias[c];
  return tape.record({n, m}, std::move(out), {&x, &w, &b}, [x, w, b, n, k, m](const detail::Node& o) {
    auto g = as_matrix(std::span<const Real>(o.grad), n, m);
    if (x.requires_grad()) accumulate_grad(x, product(g, as_matrix(w.values(), k, m).transpose()));
    if (w.requires_grad()) accumulate_grad(w, product(as_matrix(x.values(), n, k).transpose(), g));
    if (b.requires_grad()) {
      std::vector<Real> gb(m, Real(0));
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) gb[c] += o.grad[r * m + c];
      accumulate_grad(b, gb);
    }
  });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return tape.record(a.shape(), std::move(out), {&a, &b}, [a, b](const detail::Node& o) {
    accumulate_grad(a, o.grad);
    accumulate_grad(b, o.grad);
  });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return tape.record(a.shape(), std::move(out), {&a, &b}, [a, b](const detail::Node& o) {
    accumulate_grad(a, o.grad);
    if (b.requires_grad()) {
      std::vector<Real> g(o.grad.begin(), o.grad.end());
      for (auto& v : g) v = -v;
      accumulate_grad(b, g);
    }
  });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return tape.record(a.shape(), std::move(out), {&a, &b}, [a, b](const detail::Node& o) {
    std::vector<Real> g(o.grad.size());
    if (a.requires_grad()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = o.grad[i] * b.values()[i];
      accumulate_grad(a, g);
    }
    if (b.requires_grad()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = o.grad[i] * a.values()[i];
      accumulate_grad(b, g);
    }
  });
}

Tensor scale(Tape& tape, const Tensor& a, Real s) {
  return unary(tape, a, [s](Real x) { return s * x; }, [s](Real, Real) { return s; });
}

Tensor add_scalar(Tape& tape, const Tensor& a, Real s) {
  return unary(tape, a, [s](Real x) { return x + s; }, [](Real, Real) { return Real(1); });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, [](Real x) { return x > 0 ? x : Real(0); },
      [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  return unary(
      tape, a,
      [](Real x) {
        if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
        Real e = std::exp(x);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

Tensor tanh(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, [](Real x) { return std::tanh(x); }, [](Real, Real y) { return Real(1) - y * y; });
}

Tensor softplus(Tape& tape, const Tensor& a, Real shift) {
  return unary(
      tape, a,
      [shift](Real x) {
        Real z = x + shift;
        return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      },
      [shift](Real x, Real) {
        Real z = x + shift;
        if (z >= 0) return Real(1) / (Real(1) + std::exp(-z));
        Real e = std::exp(z);
        return e / (Real(1) + e);
      });
}

Tensor exp(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, [](Real x) { return std::exp(x); }, [](Real, Real y) { return y; });
}

Tensor square(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, [](Real x) { return x * x; }, [](Real x, Real) { return Real(2) * x; });
}

Tensor soft_clamp(Tape& tape, const Tensor& a, Real bound) {
  if (!(bound > 0)) throw UsageError("soft_clamp bound must be positive");
  return unary(
      tape, a, [bound](Real x) { return bound * std::tanh(x / bound); },
      [bound](Real, Real y) {
        Real t = y / bound;
        return Real(1) - t * t;
      });
}

Tensor clamp_cols(Tape& tape, const Tensor& a, std::span<const Real> lo, std::span<const Real> hi) {
  const auto n = a.rows(), c = a.cols();
  if (lo.size() != c || hi.size() != c) throw DimensionError("clamp_cols: bound width mismatch");
  std::vector<Real> out(a.size());
  std::vector<unsigned char> pass(a.size());
  auto in = a.values();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const auto i = r * c + j;
      Real v = in[i];
      pass[i] = v >= lo[j] && v <= hi[j];
      out[i] = v < lo[j] ? lo[j] : (v > hi[j] ? hi[j] : v);
    }
  }
  return tape.record(a.shape(), std::move(out), {&a}, [a, pass = std::move(pass)](const detail::Node& o) {
    std::vector<Real> g(o.grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = pass[i] ? o.grad[i] : Real(0);
    accumulate_grad(a, g);
  });
}

Tensor sum(Tape& tape, const Tensor& a) {
  Real s = 0;
  for (auto v : a.values()) s += v;
  return tape.record({}, {s}, {&a}, [a](const detail::Node& o) {
    accumulate_grad(a, std::vector<Real>(a.size(), o.grad[0]));
  });
}

Tensor mean(Tape& tape, const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean of an empty tensor");
  Real s = 0;
  for (auto v : a.values()) s += v;
  const Real inv = Real(1) / static_cast<Real>(a.size());
  return tape.record({}, {s * inv}, {&a}, [a, inv](const detail::Node& o) {
    accumulate_grad(a, std::vector<Real>(a.size(), o.grad[0] * inv));
  });
}

Tensor reshape(Tape& tape, const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  std::vector<Real> out(a.values().begin(), a.values().end());
  return tape.record(std::move(shape), std::move(out), {&a},
                     [a](const detail::Node& o) { accumulate_grad(a, o.grad); });
}

Tensor concat_cols(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const auto n = parts[0].rows();
  std::size_t width = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rows() != n) throw DimensionError("concat_cols: row count mismatch");
    offsets.push_back(width);
    width += p.cols();
  }
  std::vector<Real> out(n * width);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto c = parts[k].cols();
    auto in = parts[k].values();
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(r * c), c,
                  out.begin() + static_cast<std::ptrdiff_t>(r * width + offsets[k]));
    }
  }
  std::vector<Tensor> keep(parts.begin(), parts.end());
  return tape.record({n, width}, std::move(out), parts,
                     [keep, offsets, n, width](const detail::Node& o) {
                       for (std::size_t k = 0; k < keep.size(); ++k) {
                         if (!keep[k].requires_grad()) continue;
                         const auto c = keep[k].cols();
                         std::vector<Real> g(n * c);
                         for (std::size_t r = 0; r < n; ++r) {
                           std::copy_n(o.grad.begin() + static_cast<std::ptrdiff_t>(r * width + offsets[k]), c,
                                       g.begin() + static_cast<std::ptrdiff_t>(r * c));
                         }
                         accumulate_grad(keep[k], g);
                       }
                     });
}

Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const auto c = parts[0].cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.cols() != c && p.size() != 0) throw DimensionError("concat_rows: column count mismatch");
    n += p.rows();
  }
  std::vector<Real> out;
  out.reserve(n * c);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  std::vector<Tensor> keep(parts.begin(), parts.end());
  return tape.record({n, c}, std::move(out), parts, [keep](const detail::Node& o) {
    std::size_t off = 0;
    for (const auto& p : keep) {
      if (p.requires_grad()) {
        accumulate_grad(p, std::span<const Real>(o.grad).subspan(off, p.size()));
      }
      off += p.size();
    }
  });
}

Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t start, std::size_t count) {
  const auto n = a.rows(), c = a.cols();
  if (start + count > c) throw DimensionError("slice_cols out of range");
  std::vector<Real> out(n * count);
  auto in = a.values();
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(r * c + start), count,
                out.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  return tape.record({n, count}, std::move(out), {&a}, [a, n, c, start, count](const detail::Node& o) {
    std::vector<Real> g(n * c, Real(0));
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(o.grad.begin() + static_cast<std::ptrdiff_t>(r * count), count,
                  g.begin() + static_cast<std::ptrdiff_t>(r * c + start));
    }
    accumulate_grad(a, g);
  });
}

Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t start, std::size_t count) {
  const auto n = a.rows(), c = a.cols();
  if (start + count > n) throw DimensionError("slice_rows out of range");
  auto in = a.values();
  std::vector<Real> out(in.begin() + static_cast<std::ptrdiff_t>(start * c),
                        in.begin() + static_cast<std::ptrdiff_t>((start + count) * c));
  return tape.record({count, c}, std::move(out), {&a}, [a, c, start](const detail::Node& o) {
    std::vector<Real> g(a.size(), Real(0));
    std::copy(o.grad.begin(), o.grad.end(), g.begin() + static_cast<std::ptrdiff_t>(start * c));
    accumulate_grad(a, g);
  });
}

Tensor affine_cols(Tape& tape, const Tensor& a, std::span<const Real> scale, std::span<const Real> offset) {
  const auto n = a.rows(), c = a.cols();
  if (scale.size() != c || offset.size() != c) throw DimensionError("affine_cols: width mismatch");
  std::vector<Real> out(a.size());
  auto in = a.values();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = in[r * c + j] * scale[j] + offset[j];
  std::vector<Real> s(scale.begin(), scale.end());
  return tape.record(a.shape(), std::move(out), {&a}, [a, s, n, c](const detail::Node& o) {
    std::vector<Real> g(o.grad.size());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] = o.grad[r * c + j] * s[j];
    accumulate_grad(a, g);
  });
}

std::vector<Real> positional_encode(std::span<const Real> values, int levels) {
  if (levels < 1) throw UsageError("positional encoding needs at least one level");
  std::vector<Real> out;
  out.reserve(values.size() * 2 * static_cast<std::size_t>(levels));
  for (Real v : values) {
    Real freq = std::numbers::pi_v<Real>;
    for (int l = 0; l < levels; ++l, freq *= 2) {
      out.push_back(std::sin(freq * v));
      out.push_back(std::cos(freq * v));
    }
  }
  return out;
}

Tensor positional_encode(Tape& tape, const Tensor& a, int levels) {
  if (levels < 1) throw UsageError("positional encoding needs at least one level");
  const auto n = a.rows(), d = a.cols();
  const auto width = 2 * static_cast<std::size_t>(levels) * d;
  std::vector<Real> out = positional_encode(a.values(), levels);
  return tape.record({n, width}, std::move(out), {&a}, [a, levels](const detail::Node& o) {
    // d/dv sin(f v) = f cos(f v), d/dv cos(f v) = -f sin(f v)
    std::vector<Real> g(a.size(), Real(0));
    std::size_t k = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      Real freq = std::numbers::pi_v<Real>;
      Real acc = 0;
      for (int l = 0; l < levels; ++l, freq *= 2, k += 2) {
        acc += o.grad[k] * freq * o.value[k + 1];
        acc -= o.grad[k + 1] * freq * o.value[k];
      }
      g[i] = acc;
    }
    accumulate_grad(a, g);
  });
}

}  // namespace fg::ad
