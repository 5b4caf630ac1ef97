#include "fluidground/autodiff/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

#include "fluidground/errors.hpp"

namespace fg::ad {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<Real> values) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return node;
}

const detail::Node& deref(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw UsageError("use of an undefined tensor");
  return *node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape) {
  auto n = shape_size(shape);
  return Tensor(make_node(std::move(shape), std::vector<Real>(n, Real(0))));
}

Tensor Tensor::full(Shape shape, Real value) {
  auto n = shape_size(shape);
  return Tensor(make_node(std::move(shape), std::vector<Real>(n, value)));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values) {
  return Tensor(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(Real value) { return Tensor(make_node({}, {value})); }

Tensor Tensor::parameter(Shape shape, std::vector<Real> values) {
  auto node = make_node(std::move(shape), std::move(values));
  node->requires_grad = true;
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return deref(node_).shape; }
std::size_t Tensor::size() const { return deref(node_).value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  return s.empty() ? 1 : s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  std::size_t c = 1;
  for (std::size_t i = 1; i < s.size(); ++i) c *= s[i];
  return c;
}

std::span<const Real> Tensor::values() const { return deref(node_).value; }
std::span<Real> Tensor::values_mut() {
  deref(node_);
  return node_->value;
}

Real Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

Real Tensor::at(std::size_t row, std::size_t col) const { return values()[row * cols() + col]; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }
std::span<const Real> Tensor::grad() const { return deref(node_).grad; }

std::span<Real> Tensor::grad_mut() {
  deref(node_);
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), Real(0));
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

void Tensor::set_requires_grad(bool on) {
  deref(node_);
  if (node_->tape_id != 0) throw UsageError("cannot change requires_grad of a taped tensor");
  node_->requires_grad = on;
}

Tensor Tensor::detach() const {
  const auto& n = deref(node_);
  return Tensor(make_node(n.shape, n.value));
}

Tensor Tensor::clone() const {
  const auto& n = deref(node_);
  auto copy = make_node(n.shape, n.value);
  copy->requires_grad = n.requires_grad && n.tape_id == 0;
  return Tensor(std::move(copy));
}

std::optional<std::uint64_t> Tensor::tape_id() const {
  if (!node_ || node_->tape_id == 0) return std::nullopt;
  return node_->tape_id;
}

void accumulate_grad(const Tensor& t, std::span<const Real> delta) {
  if (!t.requires_grad()) return;
  auto& node = *t.node();
  if (delta.size() != node.value.size()) {
    throw DimensionError("gradient of size " + std::to_string(delta.size()) +
                         " for tensor of shape " + shape_string(node.shape));
  }
  if (node.grad.empty()) {
    node.grad.assign(delta.begin(), delta.end());
    return;
  }
  for (std::size_t i = 0; i < delta.size(); ++i) node.grad[i] += delta[i];
}

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}

Tape::Tape() : id_(next_tape_id++) {}

Tape Tape::inference() {
  Tape t;
  t.recording_ = false;
  return t;
}

Tensor Tape::finish(Shape shape, std::vector<Real> values, bool needs_grad, BackwardFn fn) {
  auto node = make_node(std::move(shape), std::move(values));
  if (needs_grad && recording_) {
    node->requires_grad = true;
    node->tape_id = id_;
    entries_.push_back({node, std::move(fn)});
  }
  return Tensor(std::move(node));
}

Tensor Tape::record(Shape shape, std::vector<Real> values, std::initializer_list<const Tensor*> inputs,
                    BackwardFn fn) {
  bool needs = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor* t) { return t && t->requires_grad(); });
  return finish(std::move(shape), std::move(values), needs, std::move(fn));
}

Tensor Tape::record(Shape shape, std::vector<Real> values, std::span<const Tensor> inputs,
                    BackwardFn fn) {
  bool needs = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor& t) { return t.requires_grad(); });
  return finish(std::move(shape), std::move(values), needs, std::move(fn));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward on an undefined tensor");
  if (loss.size() != 1) {
    throw DimensionError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad() || loss.tape_id() != id_) {
    throw UsageError("backward on a tensor that is not recorded on this tape");
  }
  loss.node()->grad.assign(1, Real(1));
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    const auto& out = *it->output;
    if (out.grad.empty()) continue;
    it->fn(out);
  }
  reset();
}

void Tape::reset() { entries_.clear(); }

}  // namespace fg::ad
