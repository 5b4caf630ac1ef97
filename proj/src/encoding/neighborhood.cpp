#include "fluidground/encoding/neighborhood.hpp"

#include <cmath>
#include <string>

#include "fluidground/autodiff/ops.hpp"
#include "fluidground/errors.hpp"

namespace fg::enc {

namespace {

constexpr double kDegenerate = 1e-12;

/// Neighbors of one sample with the derivative of each weight.
struct Gathered {
  std::vector<std::uint32_t> index;
  std::vector<Vec3> pos;
  std::vector<Vec3> local;
  std::vector<double> w;
  std::vector<Vec3> dw;  // d w_i / d p_i

  void clear() {
    index.clear();
    pos.clear();
    local.clear();
    w.clear();
    dw.clear();
  }
  std::size_t size() const { return index.size(); }
};

void gather(const SpatialHash& hash, const Vec3& x, double rs, Gathered& out) {
  out.clear();
  const double rs3 = rs * rs * rs;
  hash.for_each_in_ball(x, rs, [&](std::uint32_t idx, const Vec3& p) {
    const Vec3 l = p - x;
    const double r = l.norm();
    out.index.push_back(idx);
    out.pos.push_back(p);
    out.local.push_back(l);
    out.w.push_back(1.0 - r * r * r / rs3);
    out.dw.push_back((-3.0 * r / rs3) * l);
  });
}

Vec3 mean_local(const std::vector<Vec3>& local) {
  Vec3 m = Vec3::Zero();
  for (const auto& l : local) m += l;
  return m / static_cast<double>(local.size());
}

Vec3 center_of(const std::vector<Vec3>& pos, const std::vector<double>& w, bool normalized, double& weight_sum) {
  Vec3 c = Vec3::Zero();
  weight_sum = 0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    c += w[i] * pos[i];
    weight_sum += w[i];
  }
  return normalized ? Vec3(c / weight_sum) : Vec3(c / static_cast<double>(pos.size()));
}

NeighborhoodFeatures features_from(const std::vector<Vec3>& pos, const std::vector<Vec3>& local,
                                   const std::vector<double>& w, const Vec3& x, const Vec3& origin,
                                   const Vec3& ray_dir, const EncodingOptions& options) {
  NeighborhoodFeatures f;
  f.count = pos.size();
  f.p_c = x;
  f.d_c = ray_dir;
  if (f.count == 0) return f;
  double weight_sum = 0;
  const Vec3 c = center_of(pos, w, options.normalized_center, weight_sum);
  f.sigma_p = weight_sum;
  if (!options.normalized_center || weight_sum > kDegenerate) f.p_c = c;
  const Vec3 m = mean_local(local);
  const double inv_k = 1.0 / static_cast<double>(f.count);
  if (options.per_axis_deformation) {
    for (const auto& l : local) f.v_D += (l - m).cwiseAbs();
    f.v_D *= inv_k;
  } else {
    double acc = 0;
    for (const auto& l : local) acc += (l - m).norm();
    f.v_D = Vec3(acc * inv_k, 0, 0);
  }
  if (auto d = particle_relative_direction(f.p_c, origin)) f.d_c = *d;
  return f;
}

}  // namespace

void EncodingOptions::validate() const {
  if (point_levels < 1 || dir_levels < 1) throw ConfigError("encoding: positional levels must be >= 1");
  if (!(sigma_cap > 0)) throw ConfigError("encoding: sigma_cap must be > 0");
}

Vec3 fictitious_center(const NeighborSet& nbrs, bool normalized) {
  if (nbrs.empty()) throw UsageError("fictitious center of an empty neighborhood");
  double weight_sum = 0;
  return center_of(nbrs.positions, nbrs.weights, normalized, weight_sum);
}

double sphere_density(const NeighborSet& nbrs) {
  double s = 0;
  for (double w : nbrs.weights) s += w;
  return s;
}

double deformation(const NeighborSet& nbrs) {
  if (nbrs.empty()) throw UsageError("deformation of an empty neighborhood");
  const Vec3 m = mean_local(nbrs.local_vectors);
  double acc = 0;
  for (const auto& l : nbrs.local_vectors) acc += (l - m).norm();
  return acc / static_cast<double>(nbrs.size());
}

Vec3 deformation_per_axis(const NeighborSet& nbrs) {
  if (nbrs.empty()) throw UsageError("deformation of an empty neighborhood");
  const Vec3 m = mean_local(nbrs.local_vectors);
  Vec3 acc = Vec3::Zero();
  for (const auto& l : nbrs.local_vectors) acc += (l - m).cwiseAbs();
  return acc / static_cast<double>(nbrs.size());
}

std::optional<Vec3> particle_relative_direction(const Vec3& p_c, const Vec3& origin) {
  const Vec3 d = p_c - origin;
  const double n = d.norm();
  if (n <= kDegenerate) return std::nullopt;
  return Vec3(d / n);
}

NeighborhoodFeatures neighborhood_features(const NeighborSet& nbrs, const Vec3& x, const Vec3& origin,
                                           const Vec3& ray_dir, const EncodingOptions& options) {
  return features_from(nbrs.positions, nbrs.local_vectors, nbrs.weights, x, origin, ray_dir, options);
}

FeatureScaling FeatureScaling::from_box(const Box& box, double search_radius, double sigma_cap) {
  FeatureScaling s;
  s.center = box.center();
  s.half_extent = 0.5 * box.extent();
  s.search_radius = search_radius;
  s.sigma_cap = sigma_cap;
  return s;
}

namespace {

/// Scaled raw row in the column layout of raw_features.
std::vector<Real> scaled_row(const NeighborhoodFeatures& f, const FeatureScaling& s, const EncodingOptions& o) {
  std::vector<Real> row;
  const Vec3 pc = s.normalize_point(f.p_c);
  for (int a = 0; a < 3; ++a) row.push_back(static_cast<Real>(pc[a]));
  row.push_back(static_cast<Real>(f.sigma_p / s.sigma_cap));
  for (std::size_t a = 0; a < o.deformation_width(); ++a) row.push_back(static_cast<Real>(f.v_D[a] / s.search_radius));
  for (int a = 0; a < 3; ++a) row.push_back(static_cast<Real>(f.d_c[a]));
  return row;
}

}  // namespace

NeighborhoodEncoding encode_neighborhood(const NeighborSet& nbrs, const Vec3& x, const Vec3& origin,
                                         const Vec3& ray_dir, const FeatureScaling& scaling,
                                         const EncodingOptions& options) {
  NeighborhoodEncoding out;
  out.features = neighborhood_features(nbrs, x, origin, ray_dir, options);
  const auto row = scaled_row(out.features, scaling, options);
  const std::size_t nx = 4 + options.deformation_width();
  out.e_x = ad::positional_encode(std::span<const Real>(row.data(), nx), options.point_levels);
  out.e_d = ad::positional_encode(std::span<const Real>(row.data() + nx, 3), options.dir_levels);
  return out;
}

std::shared_ptr<const SpatialHash> build_hash(const Tensor& particles, double search_radius) {
  if (particles.rank() != 2 || particles.cols() != 3) {
    throw DimensionError("particle tensor must be [N, 3], got " + ad::shape_string(particles.shape()));
  }
  const auto pts = unflatten<Real>(particles.values());
  return std::make_shared<const SpatialHash>(pts, search_radius);
}

Tensor raw_features(Tape& tape, const Tensor& particles, std::shared_ptr<const SpatialHash> hash,
                    const SampleQuery& query, double search_radius, const EncodingOptions& options) {
  const std::size_t s_count = query.size();
  if (query.origins.size() != s_count || query.directions.size() != s_count) {
    throw DimensionError("sample query arrays differ in length");
  }
  if (!hash || hash->positions().size() != particles.rows()) {
    throw UsageError("spatial hash was not built over the given particles");
  }
  const std::size_t width = options.raw_width();
  const std::size_t dwid = options.deformation_width();
  std::vector<Real> out(s_count * width);
  Gathered g;
  for (std::size_t s = 0; s < s_count; ++s) {
    gather(*hash, query.points[s], search_radius, g);
    const auto f = features_from(g.pos, g.local, g.w, query.points[s], query.origins[s], query.directions[s], options);
    Real* row = out.data() + s * width;
    for (int a = 0; a < 3; ++a) row[a] = static_cast<Real>(f.p_c[a]);
    row[3] = static_cast<Real>(f.sigma_p);
    for (std::size_t a = 0; a < dwid; ++a) row[4 + a] = static_cast<Real>(f.v_D[a]);
    for (int a = 0; a < 3; ++a) row[4 + dwid + a] = static_cast<Real>(f.d_c[a]);
  }

  return tape.record(
      {s_count, width}, std::move(out), {&particles},
      [particles, hash, query, search_radius, options, width, dwid](const ad::detail::Node& o) {
        std::vector<Real> grad(particles.size(), Real(0));
        Gathered g;
        std::vector<Vec3> unit;
        for (std::size_t s = 0; s < query.size(); ++s) {
          const Real* go = o.grad.data() + s * width;
          const Real* val = o.value.data() + s * width;
          gather(*hash, query.points[s], search_radius, g);
          const std::size_t k = g.size();
          if (k == 0) continue;
          const double inv_k = 1.0 / static_cast<double>(k);
          Vec3 g_pc(go[0], go[1], go[2]);
          const double g_sigma = go[3];
          const Vec3 pc(val[0], val[1], val[2]);
          const Vec3 dc(val[4 + dwid], val[5 + dwid], val[6 + dwid]);
          const double dist = (pc - query.origins[s]).norm();
          const bool center_fallback = options.normalized_center && val[3] <= kDegenerate;
          if (!center_fallback && dist > kDegenerate) {
            const Vec3 g_dc(go[4 + dwid], go[5 + dwid], go[6 + dwid]);
            g_pc += (g_dc - g_dc.dot(dc) * dc) / dist;
          }
          if (center_fallback) g_pc.setZero();

          // Deformation terms.
          const Vec3 m = mean_local(g.local);
          unit.assign(k, Vec3::Zero());
          Vec3 mean_unit = Vec3::Zero();
          for (std::size_t i = 0; i < k; ++i) {
            const Vec3 dev = g.local[i] - m;
            if (dwid == 3) {
              for (int a = 0; a < 3; ++a) unit[i][a] = dev[a] > 0 ? 1.0 : (dev[a] < 0 ? -1.0 : 0.0);
            } else {
              const double n = dev.norm();
              if (n > 0) unit[i] = dev / n;
            }
            mean_unit += unit[i];
          }
          mean_unit *= inv_k;
          Vec3 g_v = Vec3::Zero();
          for (std::size_t a = 0; a < dwid; ++a) g_v[a] = go[4 + a];

          const double weight_sum = val[3];
          for (std::size_t i = 0; i < k; ++i) {
            Vec3 gi = g_sigma * g.dw[i];
            if (options.normalized_center) {
              if (!center_fallback) gi += (g.w[i] * g_pc + g_pc.dot(g.pos[i] - pc) * g.dw[i]) / weight_sum;
            } else {
              gi += inv_k * (g.w[i] * g_pc + g_pc.dot(g.pos[i]) * g.dw[i]);
            }
            const Vec3 du = inv_k * (unit[i] - mean_unit);
            gi += dwid == 3 ? Vec3(g_v.cwiseProduct(du)) : Vec3(g_v.x() * du);
            Real* dst = grad.data() + 3 * g.index[i];
            for (int a = 0; a < 3; ++a) dst[a] += static_cast<Real>(gi[a]);
          }
        }
        ad::accumulate_grad(particles, grad);
      });
}

EncodedBatch encode_batch(Tape& tape, const Tensor& raw, const FeatureScaling& scaling,
                          const EncodingOptions& options) {
  const std::size_t width = options.raw_width();
  if (raw.rank() != 2 || raw.cols() != width) {
    throw DimensionError("raw features must be [S, " + std::to_string(width) + "], got " +
                         ad::shape_string(raw.shape()));
  }
  const std::size_t dwid = options.deformation_width();
  std::vector<Real> mul(width, Real(1)), off(width, Real(0));
  for (int a = 0; a < 3; ++a) {
    mul[a] = static_cast<Real>(1.0 / scaling.half_extent[a]);
    off[a] = static_cast<Real>(-scaling.center[a] / scaling.half_extent[a]);
  }
  mul[3] = static_cast<Real>(1.0 / scaling.sigma_cap);
  for (std::size_t a = 0; a < dwid; ++a) mul[4 + a] = static_cast<Real>(1.0 / scaling.search_radius);
  const Tensor scaled = ad::affine_cols(tape, raw, mul, off);
  EncodedBatch out;
  out.raw = raw;
  out.e_x = ad::positional_encode(tape, ad::slice_cols(tape, scaled, 0, 4 + dwid), options.point_levels);
  out.e_d = ad::positional_encode(tape, ad::slice_cols(tape, scaled, 4 + dwid, 3), options.dir_levels);
  return out;
}

}  // namespace fg::enc
