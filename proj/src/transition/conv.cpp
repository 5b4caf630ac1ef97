#include "fluidground/transition/conv.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "fluidground/errors.hpp"
#include "fluidground/geometry/spatial_hash.hpp"

namespace fg::transition {

namespace {

void require_rows3(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.cols() != 3) {
    throw DimensionError(std::string(what) + " must be [N, 3], got " + ad::shape_string(t.shape()));
  }
}

}  // namespace

std::shared_ptr<const PairList> build_pairs(std::span<const Vec3> fluid, std::span<const Vec3> boundary, double radius) {
  if (!(radius > 0)) throw UsageError("pair radius must be positive");
  std::vector<Vec3> all(fluid.begin(), fluid.end());
  all.insert(all.end(), boundary.begin(), boundary.end());
  const SpatialHash hash(all, radius);
  auto out = std::make_shared<PairList>();
  PairList& pairs = *out;
  pairs.fluid_count = fluid.size();
  pairs.boundary_count = boundary.size();
  pairs.offsets.reserve(fluid.size() + 1);
  for (std::uint32_t i = 0; i < fluid.size(); ++i) {
    hash.for_each_in_ball(fluid[i], radius, [&](std::uint32_t j, const Vec3& p) {
      if (j == i || p == fluid[i]) return;
      pairs.center.push_back(i);
      pairs.neighbor.push_back(j);
    });
    pairs.offsets.push_back(pairs.center.size());
  }
  return out;
}

Tensor pair_offsets(Tape& tape, const Tensor& fluid, std::span<const Vec3> boundary, std::shared_ptr<const PairList> pair_list,
                    double radius) {
  require_rows3(fluid, "fluid positions");
  const PairList& pairs = *pair_list;
  if (fluid.rows() != pairs.fluid_count || boundary.size() != pairs.boundary_count) {
    throw DimensionError("pair list was built for different particle sets");
  }
  const std::size_t n = pairs.fluid_count, p_count = pairs.size();
  const auto x = fluid.values();
  const Real inv = static_cast<Real>(1.0 / radius);
  std::vector<Real> out(3 * p_count);
  for (std::size_t p = 0; p < p_count; ++p) {
    const std::size_t i = pairs.center[p], j = pairs.neighbor[p];
    for (int a = 0; a < 3; ++a) {
      const Real xj = j < n ? x[3 * j + a] : static_cast<Real>(boundary[j - n][a]);
      out[3 * p + a] = (xj - x[3 * i + a]) * inv;
    }
  }
  return tape.record({p_count, 3}, std::move(out), {&fluid}, [fluid, pair_list, n, inv](const ad::detail::Node& o) {
    const PairList& pairs = *pair_list;
    std::vector<Real> g(3 * n, Real(0));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const std::size_t i = pairs.center[p], j = pairs.neighbor[p];
      for (int a = 0; a < 3; ++a) {
        const Real d = o.grad[3 * p + a] * inv;
        g[3 * i + a] -= d;
        if (j < n) g[3 * j + a] += d;
      }
    }
    ad::accumulate_grad(fluid, g);
  });
}

Tensor window(Tape& tape, const Tensor& offsets) {
  require_rows3(offsets, "pair offsets");
  const std::size_t p_count = offsets.rows();
  const auto q = offsets.values();
  std::vector<Real> out(p_count);
  for (std::size_t p = 0; p < p_count; ++p) {
    const Real s = Real(1) - (q[3 * p] * q[3 * p] + q[3 * p + 1] * q[3 * p + 1] + q[3 * p + 2] * q[3 * p + 2]);
    out[p] = s > 0 ? s * s * s : Real(0);
  }
  return tape.record({p_count, 1}, std::move(out), {&offsets}, [offsets](const ad::detail::Node& o) {
    const auto q = offsets.values();
    std::vector<Real> g(q.size());
    for (std::size_t p = 0; p < o.grad.size(); ++p) {
      const Real s = Real(1) - (q[3 * p] * q[3 * p] + q[3 * p + 1] * q[3 * p + 1] + q[3 * p + 2] * q[3 * p + 2]);
      // d/dq (1 - |q|^2)^3 = -6 (1 - |q|^2)^2 q
      const Real c = s > 0 ? Real(-6) * s * s * o.grad[p] : Real(0);
      for (int a = 0; a < 3; ++a) g[3 * p + a] = c * q[3 * p + a];
    }
    ad::accumulate_grad(offsets, g);
  });
}

Tensor aggregate(Tape& tape, const Tensor& kernel, const Tensor& weights, const Tensor& features,
                 std::shared_ptr<const PairList> pair_list) {
  const PairList& pairs = *pair_list;
  const std::size_t p_count = pairs.size(), n = pairs.fluid_count;
  const std::size_t f_count = features.cols();
  if (features.rows() != n + pairs.boundary_count) throw DimensionError("aggregate: feature rows mismatch");
  if (kernel.rows() != p_count || weights.rows() != p_count || weights.cols() != 1) {
    throw DimensionError("aggregate: kernel/weight rows must equal the pair count");
  }
  if (f_count == 0 || kernel.cols() % f_count != 0) throw DimensionError("aggregate: kernel width not a multiple of F");
  const std::size_t c_count = kernel.cols() / f_count;
  const auto k = kernel.values(), w = weights.values(), h = features.values();
  std::vector<Real> out(n * c_count, Real(0));
  for (std::size_t p = 0; p < p_count; ++p) {
    const std::size_t i = pairs.center[p], j = pairs.neighbor[p];
    const Real* kp = k.data() + p * c_count * f_count;
    const Real* hj = h.data() + j * f_count;
    for (std::size_t c = 0; c < c_count; ++c) {
      Real acc = 0;
      for (std::size_t f = 0; f < f_count; ++f) acc += kp[c * f_count + f] * hj[f];
      out[i * c_count + c] += w[p] * acc;
    }
  }
  return tape.record(
      {n, c_count}, std::move(out), {&kernel, &weights, &features},
      [kernel, weights, features, pair_list, c_count, f_count](const ad::detail::Node& o) {
        const PairList& pairs = *pair_list;
        const auto k = kernel.values(), w = weights.values(), h = features.values();
        const std::size_t p_count = pairs.size();
        std::vector<Real> gk(kernel.requires_grad() ? k.size() : 0);
        std::vector<Real> gw(weights.requires_grad() ? w.size() : 0);
        std::vector<Real> gh(features.requires_grad() ? h.size() : 0, Real(0));
        for (std::size_t p = 0; p < p_count; ++p) {
          const std::size_t i = pairs.center[p], j = pairs.neighbor[p];
          const Real* kp = k.data() + p * c_count * f_count;
          const Real* hj = h.data() + j * f_count;
          const Real* gi = o.grad.data() + i * c_count;
          Real dw = 0;
          for (std::size_t c = 0; c < c_count; ++c) {
            Real acc = 0;
            for (std::size_t f = 0; f < f_count; ++f) {
              acc += kp[c * f_count + f] * hj[f];
              if (!gk.empty()) gk[p * c_count * f_count + c * f_count + f] = gi[c] * w[p] * hj[f];
              if (!gh.empty()) gh[j * f_count + f] += w[p] * gi[c] * kp[c * f_count + f];
            }
            dw += gi[c] * acc;
          }
          if (!gw.empty()) gw[p] = dw;
        }
        if (!gk.empty()) ad::accumulate_grad(kernel, gk);
        if (!gw.empty()) ad::accumulate_grad(weights, gw);
        if (!gh.empty()) ad::accumulate_grad(features, gh);
      });
}

Tensor clamp_row_norms(Tape& tape, const Tensor& a, Real bound, std::size_t* clamped) {
  if (!(bound > 0)) throw UsageError("clamp bound must be positive");
  const std::size_t n = a.rows(), c = a.cols();
  const auto x = a.values();
  std::vector<Real> out(x.begin(), x.end());
  std::vector<Real> norms(n);
  std::size_t count = 0;
  for (std::size_t r = 0; r < n; ++r) {
    Real s = 0;
    for (std::size_t k = 0; k < c; ++k) s += x[r * c + k] * x[r * c + k];
    norms[r] = std::sqrt(s);
    if (norms[r] > bound) {
      ++count;
      for (std::size_t k = 0; k < c; ++k) out[r * c + k] *= bound / norms[r];
    }
  }
  if (clamped) *clamped = count;
  return tape.record(a.shape(), std::move(out), {&a}, [a, bound, c, norms = std::move(norms)](const ad::detail::Node& o) {
    const auto x = a.values();
    std::vector<Real> g(o.grad.begin(), o.grad.end());
    for (std::size_t r = 0; r < norms.size(); ++r) {
      if (norms[r] <= bound) continue;
      // d(b x/|x|) = (b/|x|) (I - x̂ x̂^T)
      Real dot = 0;
      for (std::size_t k = 0; k < c; ++k) dot += o.grad[r * c + k] * x[r * c + k];
      const Real inv = Real(1) / norms[r];
      for (std::size_t k = 0; k < c; ++k) {
        g[r * c + k] = bound * inv * (o.grad[r * c + k] - dot * x[r * c + k] * inv * inv);
      }
    }
    ad::accumulate_grad(a, g);
  });
}

Tensor sub_row(Tape& tape, const Tensor& a, const Tensor& row) {
  const std::size_t n = a.rows(), c = a.cols();
  if (row.size() != c) throw DimensionError("sub_row: row width mismatch");
  const auto x = a.values(), r = row.values();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k) out[i * c + k] = x[i * c + k] - r[k];
  return tape.record(a.shape(), std::move(out), {&a, &row}, [a, row, n, c](const ad::detail::Node& o) {
    ad::accumulate_grad(a, o.grad);
    if (row.requires_grad()) {
      std::vector<Real> g(c, Real(0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) g[k] -= o.grad[i * c + k];
      ad::accumulate_grad(row, g);
    }
  });
}

Tensor smooth_row_norms(Tape& tape, const Tensor& a, Real eps) {
  const std::size_t n = a.rows(), c = a.cols();
  const auto x = a.values();
  std::vector<Real> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    Real s = eps * eps;
    for (std::size_t k = 0; k < c; ++k) s += x[r * c + k] * x[r * c + k];
    out[r] = std::sqrt(s) - eps;
  }
  return tape.record({n, 1}, std::move(out), {&a}, [a, c, eps](const ad::detail::Node& o) {
    const auto x = a.values();
    std::vector<Real> g(x.size());
    for (std::size_t r = 0; r < o.grad.size(); ++r) {
      const Real inv = o.grad[r] / (o.value[r] + eps);
      for (std::size_t k = 0; k < c; ++k) g[r * c + k] = inv * x[r * c + k];
    }
    ad::accumulate_grad(a, g);
  });
}

}  // namespace fg::transition
