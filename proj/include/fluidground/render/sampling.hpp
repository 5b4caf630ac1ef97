#pragma once

#include <span>
#include <vector>

#include "fluidground/random.hpp"

namespace fg::render {

/// Depths along one ray, sorted ascending, with the interval owned by each sample.
struct RaySamples {
  std::vector<double> t;
  std::vector<double> delta;  // t[i+1] - t[i]; the last sample extends to `far`
  double near = 0;
  double far = 0;

  std::size_t size() const { return t.size(); }
};

std::vector<double> sample_intervals(std::span<const double> t, double far);

/// One sample per equal-width stratum of [near, far]: uniform within the
/// stratum when `rng` is given, the stratum midpoint otherwise.
RaySamples stratified_samples(double near, double far, int n, Rng* rng);

/// Inverse-transform samples of the piecewise-constant density over `n_bins`
/// equal strata of [near, far] with the given bin weights. All-zero weights
/// fall back to the uniform density. Without `rng` the quantiles (j + 0.5) / n are used.
std::vector<double> sample_piecewise_constant(double near, double far, std::span<const double> weights, int n,
                                              Rng* rng);

/// Coarse samples merged with `n_fine` samples drawn from the coarse weights, depth-sorted.
RaySamples hierarchical_resample(const RaySamples& coarse, std::span<const double> weights, int n_fine, Rng* rng);

}  // namespace fg::render
