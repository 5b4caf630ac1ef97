#include "fluidground/autodiff/adam.hpp"

#include <cmath>

#include "fluidground/errors.hpp"

namespace fg::ad {

Adam::Adam(NamedTensors params, AdamOptions options) : params_(std::move(params)), options_(options) {
  if (!(options_.beta1 > 0 && options_.beta1 < 1 && options_.beta2 > 0 && options_.beta2 < 1)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(options_.eps > 0) || options_.lr < 0) throw ConfigError("Adam needs eps > 0 and lr >= 0");
  for (const auto& [name, p] : params_) {
    if (!p.requires_grad()) throw UsageError("Adam parameter '" + name + "' does not track gradients");
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  for (const auto& [name, p] : params_) {
    if (!p.has_grad()) throw UsageError("Adam step: parameter '" + name + "' has no gradient");
  }
  ++step_count_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k].second;
    auto g = p.grad();
    auto x = p.values_mut();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      if (options_.lr == 0) continue;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      x[i] = static_cast<Real>(x[i] - options_.lr * mhat / (std::sqrt(vhat) + options_.eps));
    }
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

NamedTensors Adam::state(const std::string& prefix) const {
  NamedTensors out;
  out.emplace_back(prefix + "/step", Tensor::from({1}, {static_cast<Real>(step_count_)}));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& [name, p] = params_[k];
    std::vector<Real> m(m_[k].begin(), m_[k].end()), v(v_[k].begin(), v_[k].end());
    out.emplace_back(prefix + "/" + name + "/m", Tensor::from(p.shape(), std::move(m)));
    out.emplace_back(prefix + "/" + name + "/v", Tensor::from(p.shape(), std::move(v)));
  }
  return out;
}

void Adam::load_state(const NamedTensors& tensors, const std::string& prefix) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw IoError("optimizer state is missing '" + name + "'");
  };
  step_count_ = static_cast<std::int64_t>(find(prefix + "/step").item());
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& name = params_[k].first;
    const auto& m = find(prefix + "/" + name + "/m");
    const auto& v = find(prefix + "/" + name + "/v");
    if (m.size() != m_[k].size() || v.size() != v_[k].size()) {
      throw IoError("optimizer state for '" + name + "' has the wrong size");
    }
    m_[k].assign(m.values().begin(), m.values().end());
    v_[k].assign(v.values().begin(), v.values().end());
  }
}

}  // namespace fg::ad
