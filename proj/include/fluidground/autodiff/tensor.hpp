#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fg::ad {

#ifdef FG_USE_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::uint64_t tape_id = 0;  // 0 for leaves and constants
};

}  // namespace detail

/// Dense row-major tensor handle. Copies share storage; use clone() or
/// detach() for an independent buffer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, Real value);
  static Tensor from(Shape shape, std::vector<Real> values);
  static Tensor scalar(Real value);
  /// Leaf tensor that accumulates gradient.
  static Tensor parameter(Shape shape, std::vector<Real> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Leading extent (1 for scalars).
  std::size_t rows() const;
  /// Product of trailing extents.
  std::size_t cols() const;

  std::span<const Real> values() const;
  std::span<Real> values_mut();
  Real item() const;
  Real at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const Real> grad() const;
  /// Gradient buffer, allocated as zeros on first access.
  std::span<Real> grad_mut();
  void zero_grad();
  void set_requires_grad(bool on);

  /// Copy of the values with no gradient tracking.
  Tensor detach() const;
  /// Copy of the values that keeps the requires_grad flag of a leaf.
  Tensor clone() const;

  std::optional<std::uint64_t> tape_id() const;
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend class Tape;
  std::shared_ptr<detail::Node> node_;
};

using NamedTensor = std::pair<std::string, Tensor>;
using NamedTensors = std::vector<NamedTensor>;

/// Reverse-mode tape. Operations append backward closures in creation order;
/// backward() replays them in reverse and then resets the tape.
class Tape {
 public:
  /// Receives the finished output node; `out.grad` holds d(loss)/d(out).
  using BackwardFn = std::function<void(const detail::Node& out)>;

  Tape();
  /// A non-recording tape evaluates values only.
  static Tape inference();

  bool recording() const { return recording_; }
  std::uint64_t id() const { return id_; }
  std::size_t size() const { return entries_.size(); }

  /// Wraps an op result. When recording and any input requires grad, the
  /// result joins the tape and `fn` runs during backward.
  Tensor record(Shape shape, std::vector<Real> values, std::initializer_list<const Tensor*> inputs,
                BackwardFn fn);
  Tensor record(Shape shape, std::vector<Real> values, std::span<const Tensor> inputs, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable leaf.
  void backward(const Tensor& loss);
  void reset();

 private:
  struct Entry {
    std::shared_ptr<detail::Node> output;
    BackwardFn fn;
  };
  Tensor finish(Shape shape, std::vector<Real> values, bool needs_grad, BackwardFn fn);

  std::uint64_t id_;
  bool recording_ = true;
  std::vector<Entry> entries_;
};

/// Adds `delta` into the gradient of `t` when it tracks gradients.
void accumulate_grad(const Tensor& t, std::span<const Real> delta);

}  // namespace fg::ad
