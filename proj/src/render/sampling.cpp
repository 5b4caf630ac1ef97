#include "fluidground/render/sampling.hpp"

#include <algorithm>

#include "fluidground/errors.hpp"

namespace fg::render {

std::vector<double> sample_intervals(std::span<const double> t, double far) {
  std::vector<double> d(t.size());
  for (std::size_t i = 0; i + 1 < t.size(); ++i) d[i] = t[i + 1] - t[i];
  if (!t.empty()) d.back() = far - t.back();
  return d;
}

RaySamples stratified_samples(double near, double far, int n, Rng* rng) {
  if (n < 1) throw UsageError("stratified sampling needs at least one sample");
  if (!(far > near) || near < 0) throw UsageError("stratified sampling needs far > near >= 0");
  RaySamples s;
  s.near = near;
  s.far = far;
  const double width = (far - near) / n;
  s.t.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double u = rng ? uniform01(*rng) : 0.5;
    s.t[static_cast<std::size_t>(k)] = near + (k + u) * width;
  }
  s.delta = sample_intervals(s.t, far);
  return s;
}

std::vector<double> sample_piecewise_constant(double near, double far, std::span<const double> weights, int n,
                                              Rng* rng) {
  const std::size_t bins = weights.size();
  if (bins == 0) throw UsageError("piecewise-constant sampling needs at least one bin");
  std::vector<double> cdf(bins + 1, 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    if (weights[k] < 0) throw UsageError("sampling weights must be non-negative");
    cdf[k + 1] = cdf[k] + weights[k];
  }
  const bool uniform = !(cdf.back() > 0);
  for (std::size_t k = 1; k <= bins; ++k) cdf[k] = uniform ? double(k) / bins : cdf[k] / cdf.back();
  cdf.back() = 1.0;

  const double width = (far - near) / static_cast<double>(bins);
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
  for (int j = 0; j < n; ++j) {
    const double u = rng ? uniform01(*rng) : (j + 0.5) / n;
    // First bin whose upper CDF edge exceeds u; this never selects an empty bin.
    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()) - 1, bins - 1);
    const double mass = cdf[k + 1] - cdf[k];
    const double frac = mass > 0 ? std::clamp((u - cdf[k]) / mass, 0.0, 1.0) : 0.5;
    out[static_cast<std::size_t>(j)] = near + (static_cast<double>(k) + frac) * width;
  }
  return out;
}

RaySamples hierarchical_resample(const RaySamples& coarse, std::span<const double> weights, int n_fine, Rng* rng) {
  if (weights.size() != coarse.size()) throw DimensionError("one coarse weight per coarse sample is required");
  RaySamples out;
  out.near = coarse.near;
  out.far = coarse.far;
  out.t = coarse.t;
  const auto fine = sample_piecewise_constant(coarse.near, coarse.far, weights, n_fine, rng);
  out.t.insert(out.t.end(), fine.begin(), fine.end());
  std::sort(out.t.begin(), out.t.end());
  out.delta = sample_intervals(out.t, out.far);
  return out;
}

}  // namespace fg::render
