#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fluidground/autodiff/ops.hpp"
#include "fluidground/encoding/neighborhood.hpp"
#include "fluidground/errors.hpp"
#include "support/fd.hpp"

using namespace fg;
using namespace fg::enc;

namespace {

constexpr double kRs = 0.45;

NeighborSet make_set(const Vec3& x, const std::vector<Vec3>& pts, double rs = kRs) {
  NeighborSet n;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    n.indices.push_back(i);
    n.positions.push_back(pts[i]);
    n.local_vectors.push_back(pts[i] - x);
    n.weights.push_back(neighbor_weight(pts[i] - x, rs));
  }
  return n;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  return Vec3(g(rng), g(rng), g(rng)).normalized();
}

/// Particles in a ball around x whose distance to x stays clear of the kernel edge.
std::vector<Vec3> particles_around(std::mt19937_64& rng, const Vec3& x, std::size_t n, double rs = kRs) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Vec3> out;
  while (out.size() < n) {
    const double r = 1.3 * rs * std::cbrt(u(rng));
    if (std::abs(r - rs) < 1e-3) continue;
    out.push_back(x + r * random_unit(rng));
  }
  return out;
}

/// Two-pass loop form of the deformation statistic.
double loop_deformation(const std::vector<Vec3>& local) {
  double mx = 0, my = 0, mz = 0;
  for (const auto& l : local) {
    mx += l.x();
    my += l.y();
    mz += l.z();
  }
  const double k = static_cast<double>(local.size());
  mx /= k;
  my /= k;
  mz /= k;
  double acc = 0;
  for (const auto& l : local) {
    const double dx = l.x() - mx, dy = l.y() - my, dz = l.z() - mz;
    acc += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return acc / k;
}

ad::Tensor particle_tensor(const std::vector<Vec3>& pts) {
  return ad::Tensor::parameter({pts.size(), 3}, flatten<ad::Real>(pts));
}

SampleQuery query_from(const std::vector<Vec3>& points, const Vec3& origin) {
  SampleQuery q;
  q.points = points;
  for (const auto& p : points) {
    q.origins.push_back(origin);
    q.directions.push_back((p - origin).normalized());
  }
  return q;
}

}  // namespace

TEST_CASE("fictitious_center examples") {
  const Vec3 x(0.2, -0.1, 0.4);
  CHECK(fictitious_center(make_set(x, {x})) == x);
  const Vec3 a = x + Vec3(kRs / 2, 0, 0), b = x + Vec3(0, 0, -kRs / 2);
  const Vec3 pc = fictitious_center(make_set(x, {a, b}));
  CHECK((pc - 0.4375 * (a + b)).norm() < 1e-15);
  // Normalized variant is a convex combination.
  CHECK((fictitious_center(make_set(x, {a, b}), true) - 0.5 * (a + b)).norm() < 1e-15);
  // Weights vanish at the ball edge.
  const Vec3 edge = x + Vec3(kRs * (1 - 1e-9), 0, 0);
  CHECK(fictitious_center(make_set(x, {edge, edge})).norm() < 1e-8);
  CHECK_THROWS_AS(fictitious_center(NeighborSet{}), UsageError);
}

TEST_CASE("sphere_density examples") {
  const Vec3 x(0.5, 0.5, 0.5);
  CHECK(sphere_density(NeighborSet{}) == 0.0);
  CHECK(sphere_density(make_set(x, {x})) == 1.0);
  const auto three = make_set(x, {x + Vec3(kRs / 2, 0, 0), x - Vec3(0, kRs / 2, 0), x + Vec3(0, 0, kRs / 2)});
  CHECK(sphere_density(three) == 2.625);
}

TEST_CASE("deformation examples") {
  const Vec3 x = Vec3::Zero();
  CHECK(deformation(make_set(x, {Vec3(0.25, 0, 0), Vec3(0.25, 0, 0), Vec3(0.25, 0, 0)})) == 0.0);
  const double a = 0.13;
  CHECK(deformation(make_set(x, {Vec3(a, 0, 0), Vec3(-a, 0, 0)})) == doctest::Approx(a).epsilon(1e-15));
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto nb = make_set(x, particles_around(rng, x, 20));
    CHECK(std::abs(deformation(nb) - loop_deformation(nb.local_vectors)) < 1e-12);
    const Vec3 axis = deformation_per_axis(nb);
    CHECK((axis.array() >= 0).all());
  }
  CHECK_THROWS_AS(deformation(NeighborSet{}), UsageError);
}

TEST_CASE("particle_relative_direction examples") {
  CHECK((*particle_relative_direction(Vec3(0, 0, 2), Vec3::Zero()) - Vec3(0, 0, 1)).norm() == 0.0);
  CHECK((*particle_relative_direction(Vec3(1, 3, 4), Vec3(1, 0, 0)) - Vec3(0, 0.6, 0.8)).norm() < 1e-15);
  CHECK_FALSE(particle_relative_direction(Vec3(1, 2, 3), Vec3(1, 2, 3)));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 o(u(rng), u(rng), u(rng)), p(u(rng), u(rng), u(rng));
    CHECK(std::abs(particle_relative_direction(p, o)->norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("encode_neighborhood examples") {
  const Box box{Vec3(-0.8, -0.8, 0), Vec3(0.8, 0.8, 1.6)};
  const auto scaling = FeatureScaling::from_box(box, kRs, 256.0);
  const EncodingOptions opts;
  CHECK(opts.ex_width() == 100);
  CHECK(opts.ed_width() == 24);
  const Vec3 origin(3, 0, 1);
  const Vec3 x(0.1, 0.2, 0.3);
  const Vec3 dir = (x - origin).normalized();

  SUBCASE("empty neighborhood convention") {
    const auto e = encode_neighborhood(NeighborSet{}, x, origin, dir, scaling, opts);
    CHECK(e.features.sigma_p == 0.0);
    CHECK(e.features.p_c == x);
    CHECK(e.features.v_D.x() == 0.0);
    CHECK(e.features.d_c == dir);
    CHECK(e.e_x.size() == 100);
    CHECK(e.e_d.size() == 24);
    CHECK(std::all_of(e.e_x.begin(), e.e_x.end(), [](double v) { return std::isfinite(v); }));
  }
  SUBCASE("single coincident particle") {
    const auto e = encode_neighborhood(make_set(x, {x}), x, origin, dir, scaling, opts);
    const Vec3 pn = scaling.normalize_point(x);
    std::vector<ad::Real> expected = ad::positional_encode(std::vector<ad::Real>{pn.x(), pn.y(), pn.z()}, 10);
    const auto sig = ad::positional_encode(std::vector<ad::Real>{1.0 / 256.0}, 10);
    const auto zero = ad::positional_encode(std::vector<ad::Real>{0.0}, 10);
    expected.insert(expected.end(), sig.begin(), sig.end());
    expected.insert(expected.end(), zero.begin(), zero.end());
    REQUIRE(e.e_x.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(e.e_x[i] == expected[i]);
    CHECK((e.features.d_c - dir).norm() < 1e-15);
  }
  SUBCASE("per-axis deformation widens e_x") {
    EncodingOptions axis = opts;
    axis.per_axis_deformation = true;
    CHECK(axis.ex_width() == 140);
    const auto e = encode_neighborhood(make_set(x, {x, x + Vec3(0.1, 0, 0)}), x, origin, dir, scaling, axis);
    CHECK(e.e_x.size() == 140);
  }
}

TEST_CASE("raw_features agrees with the per-sample reference path") {
  std::mt19937_64 rng(21);
  for (bool normalized : {false, true})
    for (bool per_axis : {false, true}) {
      EncodingOptions opts;
      opts.normalized_center = normalized;
      opts.per_axis_deformation = per_axis;
      std::vector<Vec3> pts;
      for (int c = 0; c < 4; ++c) {
        const auto cluster = particles_around(rng, Vec3(0.3 * c, 0, 0.5), 30);
        pts.insert(pts.end(), cluster.begin(), cluster.end());
      }
      const auto particles = particle_tensor(pts);
      const auto hash = build_hash(particles, kRs);
      std::vector<Vec3> samples;
      for (int s = 0; s < 40; ++s) samples.push_back(Vec3(-0.5 + 0.06 * s, 0.05, 0.45));
      samples.push_back(Vec3(5, 5, 5));  // empty neighborhood
      const Vec3 origin(0.4, -3, 0.5);
      const auto q = query_from(samples, origin);
      auto tape = ad::Tape::inference();
      const auto raw = raw_features(tape, particles, hash, q, kRs, opts);
      REQUIRE(raw.shape() == ad::Shape{samples.size(), opts.raw_width()});
      const SpatialHash plain(pts, kRs);
      for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto f =
            neighborhood_features(plain.ball_query(samples[s], kRs), samples[s], origin, q.directions[s], opts);
        const std::size_t dw = opts.deformation_width();
        for (int a = 0; a < 3; ++a) CHECK(raw.at(s, a) == doctest::Approx(f.p_c[a]).epsilon(1e-14));
        CHECK(raw.at(s, 3) == doctest::Approx(f.sigma_p).epsilon(1e-14));
        for (std::size_t a = 0; a < dw; ++a) CHECK(raw.at(s, 4 + a) == doctest::Approx(f.v_D[a]).epsilon(1e-14));
        for (int a = 0; a < 3; ++a) CHECK(raw.at(s, 4 + dw + a) == doctest::Approx(f.d_c[a]).epsilon(1e-14));
      }
      const auto last = samples.size() - 1;
      CHECK(raw.at(last, 3) == 0.0);
      CHECK(raw.at(last, 0) == 5.0);
    }
}

TEST_CASE("raw_features gradient matches finite differences") {
  std::mt19937_64 rng(1234);
  const Box box{Vec3(-0.8, -0.8, 0), Vec3(0.8, 0.8, 1.6)};
  const auto scaling = FeatureScaling::from_box(box, kRs, 256.0);
  double worst = 0;
  for (int seed = 0; seed < 120; ++seed) {
    EncodingOptions opts;
    opts.normalized_center = seed % 3 == 1;
    opts.per_axis_deformation = seed % 4 == 2;
    const Vec3 center(0.1, -0.05, 0.7);
    auto pts = particles_around(rng, center, 12);
    std::vector<Vec3> samples;
    for (int s = 0; s < 3; ++s) samples.push_back(center + 0.1 * random_unit(rng));
    // Keep every particle clear of every sample's kernel edge.
    for (auto& p : pts)
      for (const auto& x : samples)
        while (std::abs((p - x).norm() - kRs) < 2e-3) p += 5e-3 * random_unit(rng);
    const auto q = query_from(samples, Vec3(2.5, 1.0, 0.9));
    auto particles = particle_tensor(pts);
    const bool through_gamma = seed % 2 == 0;
    const std::size_t out_width = through_gamma ? opts.ex_width() + opts.ed_width() : opts.raw_width();
    const auto weights = test::random_values(rng, samples.size() * out_width);

    auto loss_of = [&](ad::Tape& tape) {
      const auto hash = build_hash(particles, kRs);
      const auto raw = raw_features(tape, particles, hash, q, kRs, opts);
      if (!through_gamma) return test::weighted_sum(tape, raw, weights);
      const auto enc = encode_batch(tape, raw, scaling, opts);
      const std::vector<ad::Tensor> parts{enc.e_x, enc.e_d};
      return test::weighted_sum(tape, ad::concat_cols(tape, parts), weights);
    };
    ad::Tape tape;
    tape.backward(loss_of(tape));
    const std::vector<ad::Real> analytic(particles.grad().begin(), particles.grad().end());
    const auto numeric = test::central_difference(
        particles.values_mut(),
        [&] {
          auto t = ad::Tape::inference();
          return static_cast<double>(loss_of(t).item());
        },
        1e-6);
    worst = std::max(worst, test::max_relative_error(analytic, numeric));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("pre-encoding quantities are rotation equivariant") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 x(0.2, 0.1, 0.3);
    const auto pts = particles_around(rng, x, 25);
    const Vec3 origin(1.5, -2, 0.5);
    const Mat3 R = Eigen::AngleAxisd(1.0 + trial, random_unit(rng)).toRotationMatrix();
    std::vector<Vec3> rotated;
    for (const auto& p : pts) rotated.push_back(R * p);
    const EncodingOptions opts;
    const auto f = neighborhood_features(make_set(x, pts), x, origin, (x - origin).normalized(), opts);
    const auto g = neighborhood_features(make_set(R * x, rotated), R * x, R * origin,
                                         R * (x - origin).normalized(), opts);
    CHECK((g.p_c - R * f.p_c).norm() < 1e-12);
    CHECK((g.d_c - R * f.d_c).norm() < 1e-12);
    CHECK(g.sigma_p == doctest::Approx(f.sigma_p).epsilon(1e-12));
    CHECK(g.v_D.x() == doctest::Approx(f.v_D.x()).epsilon(1e-12));
  }
}

TEST_CASE("raw_features is invariant to particle order") {
  std::mt19937_64 rng(99);
  auto pts = particles_around(rng, Vec3(0, 0, 0.5), 200);
  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Vec3> shuffled;
  for (auto i : perm) shuffled.push_back(pts[i]);
  std::vector<Vec3> samples;
  for (int s = 0; s < 60; ++s) samples.push_back(Vec3(0, 0, 0.5) + 0.3 * random_unit(rng));
  const auto q = query_from(samples, Vec3(0, -3, 0.5));
  auto tape = ad::Tape::inference();
  const auto a = particle_tensor(pts), b = particle_tensor(shuffled);
  const auto ra = raw_features(tape, a, build_hash(a, kRs), q, kRs, EncodingOptions{});
  const auto rb = raw_features(tape, b, build_hash(b, kRs), q, kRs, EncodingOptions{});
  CHECK(std::equal(ra.values().begin(), ra.values().end(), rb.values().begin()));
}

TEST_CASE("raw_features input validation") {
  const auto particles = particle_tensor({Vec3::Zero(), Vec3::Ones()});
  SampleQuery q;
  q.points = {Vec3::Zero()};
  q.origins = {Vec3::Ones()};
  auto tape = ad::Tape::inference();
  CHECK_THROWS_AS(raw_features(tape, particles, build_hash(particles, kRs), q, kRs, {}), DimensionError);
  q.directions = {Vec3::UnitZ()};
  const auto other = particle_tensor({Vec3::Zero()});
  CHECK_THROWS_AS(raw_features(tape, particles, build_hash(other, kRs), q, kRs, {}), UsageError);
  CHECK_THROWS_AS(build_hash(ad::Tensor::zeros({4, 2}), kRs), DimensionError);
}
