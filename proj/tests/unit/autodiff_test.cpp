#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "fluidground/autodiff/adam.hpp"
#include "fluidground/autodiff/checkpoint.hpp"
#include "fluidground/autodiff/mlp.hpp"
#include "fluidground/autodiff/ops.hpp"
#include "fluidground/errors.hpp"
#include "support/fd.hpp"

using namespace fg;
using namespace fg::ad;

namespace {

/// Straight-line evaluation of an MLP from its raw weights, no tape involved.
std::vector<double> hand_mlp(const Mlp& mlp, const std::vector<double>& input) {
  std::vector<double> h = input;
  const auto& spec = mlp.spec();
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    if (spec.skip_layer && *spec.skip_layer == l) h.insert(h.end(), input.begin(), input.end());
    const auto& w = mlp.weight(l);
    const auto& b = mlp.bias(l);
    const auto out = spec.layer_widths[l + 1];
    std::vector<double> next(out);
    for (std::size_t j = 0; j < out; ++j) {
      double acc = b.values()[j];
      for (std::size_t i = 0; i < h.size(); ++i) acc += h[i] * w.values()[i * out + j];
      switch (spec.activations[l]) {
        case Activation::ReLU: acc = acc > 0 ? acc : 0; break;
        case Activation::Sigmoid: acc = 1 / (1 + std::exp(-acc)); break;
        case Activation::Tanh: acc = std::tanh(acc); break;
        case Activation::None: break;
      }
      next[j] = acc;
    }
    h = std::move(next);
  }
  return h;
}

Mlp identity_layer(std::size_t width, Activation act) {
  MlpSpec spec{{width, width}, {act}, 1};
  Mlp mlp(spec, "id");
  auto w = mlp.weight(0).values_mut();
  std::fill(w.begin(), w.end(), 0);
  for (std::size_t i = 0; i < width; ++i) w[i * width + i] = 1;
  return mlp;
}

struct OpCase {
  const char* name;
  std::vector<Shape> inputs;
  std::function<Tensor(Tape&, const std::vector<Tensor>&)> op;
  bool kinked = false;
};

double check_op_gradient(const OpCase& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> inputs;
  for (const auto& s : c.inputs) {
    auto vals = c.kinked ? test::random_away_from_zero(rng, shape_size(s)) : test::random_values(rng, shape_size(s));
    inputs.push_back(Tensor::parameter(s, vals));
  }
  Tape probe = Tape::inference();
  const auto out_shape = c.op(probe, inputs).shape();
  const auto weights = test::random_values(rng, shape_size(out_shape));

  Tape tape;
  auto loss = test::weighted_sum(tape, c.op(tape, inputs), weights);
  tape.backward(loss);

  double worst = 0;
  for (auto& in : inputs) {
    std::vector<Real> analytic(in.grad().begin(), in.grad().end());
    auto numeric = test::central_difference(
        in.values_mut(),
        [&] {
          Tape t = Tape::inference();
          return static_cast<double>(test::weighted_sum(t, c.op(t, inputs), weights).item());
        },
        1e-5);
    worst = std::max(worst, test::max_relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor::from({2, 3}, std::vector<Real>(5)), DimensionError);
  auto p = Tensor::parameter({2}, {1, 2});
  CHECK(p.requires_grad());
  CHECK_FALSE(p.has_grad());
  auto d = p.detach();
  CHECK_FALSE(d.requires_grad());
  Tape tape;
  auto y = sum(tape, mul(tape, d, d));
  CHECK_FALSE(y.requires_grad());
  CHECK_THROWS_AS(tape.backward(y), UsageError);
  CHECK_FALSE(d.has_grad());
}

TEST_CASE("forward_mlp examples") {
  Tape tape;
  SUBCASE("identity linear layer") {
    auto mlp = identity_layer(3, Activation::None);
    auto out = mlp.forward(tape, Tensor::from({1, 3}, {1, 2, 3}));
    CHECK(out.values()[0] == 1);
    CHECK(out.values()[1] == 2);
    CHECK(out.values()[2] == 3);
  }
  SUBCASE("relu with identity weights") {
    auto mlp = identity_layer(2, Activation::ReLU);
    auto out = mlp.forward(tape, Tensor::from({1, 2}, {-1, 2}));
    CHECK(out.values()[0] == 0);
    CHECK(out.values()[1] == 2);
  }
  SUBCASE("random two-layer network matches a hand evaluator") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      MlpSpec spec{{4, 7, 3}, {Activation::Tanh, Activation::None}, seed};
      Mlp mlp(spec, "net");
      std::mt19937_64 rng(seed + 100);
      auto input = test::random_values(rng, 4);
      auto out = mlp.forward(tape, Tensor::from({1, 4}, input));
      auto ref = hand_mlp(mlp, std::vector<double>(input.begin(), input.end()));
      for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out.values()[i] - ref[i]) < 1e-12);
    }
  }
  SUBCASE("skip connection matches a hand evaluator") {
    MlpSpec spec{{3, 5, 5, 2}, {Activation::ReLU, Activation::ReLU, Activation::None}, 9, 2};
    Mlp mlp(spec, "skip");
    auto out = mlp.forward(tape, Tensor::from({1, 3}, {0.3, -0.4, 0.9}));
    auto ref = hand_mlp(mlp, {0.3, -0.4, 0.9});
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(out.values()[i] - ref[i]) < 1e-12);
  }
  SUBCASE("width mismatch is a dimension error") {
    Mlp mlp(MlpSpec{{3, 2}, {Activation::None}, 0}, "m");
    CHECK_THROWS_AS(mlp.forward(tape, Tensor::from({1, 2}, {1, 2})), DimensionError);
  }
  SUBCASE("invalid specs are rejected") {
    CHECK_THROWS_AS(Mlp(MlpSpec{{3}, {}, 0}, "m"), ConfigError);
    CHECK_THROWS_AS(Mlp(MlpSpec{{3, 2}, {}, 0}, "m"), ConfigError);
  }
}

TEST_CASE("backward examples") {
  SUBCASE("power rule") {
    auto x = Tensor::parameter({1}, {3});
    Tape tape;
    tape.backward(sum(tape, square(tape, x)));
    CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("sum is linear") {
    auto x = Tensor::parameter({2, 3}, {1, -2, 3, 4, 5, 6});
    Tape tape;
    tape.backward(sum(tape, x));
    for (auto g : x.grad()) CHECK(g == 1);
  }
  SUBCASE("tape is consumed") {
    auto x = Tensor::parameter({1}, {2});
    Tape tape;
    auto y = sum(tape, square(tape, x));
    CHECK(tape.size() > 0);
    tape.backward(y);
    CHECK(tape.size() == 0);
  }
  SUBCASE("non-scalar loss is rejected") {
    auto x = Tensor::parameter({2}, {1, 2});
    Tape tape;
    CHECK_THROWS_AS(tape.backward(square(tape, x)), DimensionError);
  }
  SUBCASE("loss from another tape is rejected") {
    auto x = Tensor::parameter({1}, {2});
    Tape a, b;
    auto y = sum(a, square(a, x));
    CHECK_THROWS_AS(b.backward(y), UsageError);
  }
  SUBCASE("random three-layer MLP matches finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      MlpSpec spec{{5, 8, 6, 2}, {Activation::Tanh, Activation::Sigmoid, Activation::None}, seed};
      Mlp mlp(spec, "net");
      std::mt19937_64 rng(seed);
      auto input = Tensor::parameter({4, 5}, test::random_values(rng, 20));
      auto weights = test::random_values(rng, 8);
      Tape tape;
      tape.backward(test::weighted_sum(tape, mlp.forward(tape, input), weights));
      auto params = mlp.parameters();
      params.emplace_back("input", input);
      for (auto& [name, p] : params) {
        std::vector<Real> analytic(p.grad().begin(), p.grad().end());
        auto numeric = test::central_difference(
            p.values_mut(),
            [&] {
              Tape t = Tape::inference();
              return static_cast<double>(test::weighted_sum(t, mlp.forward(t, input), weights).item());
            },
            1e-5);
        CHECK_MESSAGE(test::max_relative_error(analytic, numeric) < 1e-4, name);
      }
    }
  }
}

TEST_CASE("every differentiable op matches finite differences over 100 seeds") {
  const std::vector<OpCase> cases = {
      {"matmul", {{3, 4}, {4, 2}}, [](Tape& t, const auto& in) { return matmul(t, in[0], in[1]); }},
      {"linear", {{3, 4}, {4, 2}, {2}}, [](Tape& t, const auto& in) { return linear(t, in[0], in[1], in[2]); }},
      {"add", {{2, 3}, {2, 3}}, [](Tape& t, const auto& in) { return add(t, in[0], in[1]); }},
      {"sub", {{2, 3}, {2, 3}}, [](Tape& t, const auto& in) { return sub(t, in[0], in[1]); }},
      {"mul", {{2, 3}, {2, 3}}, [](Tape& t, const auto& in) { return mul(t, in[0], in[1]); }},
      {"scale", {{5}}, [](Tape& t, const auto& in) { return scale(t, in[0], -1.7); }},
      {"add_scalar", {{5}}, [](Tape& t, const auto& in) { return add_scalar(t, in[0], 0.3); }},
      {"relu", {{6}}, [](Tape& t, const auto& in) { return relu(t, in[0]); }, true},
      {"sigmoid", {{6}}, [](Tape& t, const auto& in) { return sigmoid(t, in[0]); }},
      {"tanh", {{6}}, [](Tape& t, const auto& in) { return ad::tanh(t, in[0]); }},
      {"softplus", {{6}}, [](Tape& t, const auto& in) { return softplus(t, in[0], -1); }},
      {"exp", {{6}}, [](Tape& t, const auto& in) { return ad::exp(t, in[0]); }},
      {"square", {{6}}, [](Tape& t, const auto& in) { return square(t, in[0]); }},
      {"soft_clamp", {{6}}, [](Tape& t, const auto& in) { return soft_clamp(t, in[0], 0.5); }},
      {"clamp_cols",
       {{4, 2}},
       [](Tape& t, const auto& in) {
         const Real lo[] = {-0.5, -2}, hi[] = {0.5, 2};
         return clamp_cols(t, in[0], lo, hi);
       },
       true},
      {"sum", {{3, 2}}, [](Tape& t, const auto& in) { return sum(t, in[0]); }},
      {"mean", {{3, 2}}, [](Tape& t, const auto& in) { return mean(t, in[0]); }},
      {"reshape", {{3, 2}}, [](Tape& t, const auto& in) { return reshape(t, in[0], {2, 3}); }},
      {"concat_cols", {{3, 2}, {3, 1}}, [](Tape& t, const auto& in) { return concat_cols(t, in); }},
      {"concat_rows", {{2, 3}, {1, 3}}, [](Tape& t, const auto& in) { return concat_rows(t, in); }},
      {"slice_cols", {{3, 4}}, [](Tape& t, const auto& in) { return slice_cols(t, in[0], 1, 2); }},
      {"slice_rows", {{4, 2}}, [](Tape& t, const auto& in) { return slice_rows(t, in[0], 1, 2); }},
      {"affine_cols",
       {{3, 2}},
       [](Tape& t, const auto& in) {
         const Real s[] = {2, -0.5}, o[] = {0.1, 0.2};
         return affine_cols(t, in[0], s, o);
       }},
      {"positional_encode", {{2, 2}}, [](Tape& t, const auto& in) { return positional_encode(t, in[0], 4); }},
  };
  for (const auto& c : cases) {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) worst = std::max(worst, check_op_gradient(c, seed));
    CHECK_MESSAGE(worst < 1e-4, c.name, " worst relative error ", worst);
  }
}

TEST_CASE("adam_step examples") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto p = Tensor::parameter({3}, {1, 2, 3});
    Adam adam({{"p", p}}, {.lr = 0.1});
    std::fill(p.grad_mut().begin(), p.grad_mut().end(), 0);
    adam.step();
    CHECK(p.values()[0] == 1);
    CHECK(p.values()[2] == 3);
    CHECK(adam.step_count() == 1);
  }
  SUBCASE("first step with unit gradient moves by lr") {
    auto p = Tensor::parameter({1}, {0});
    Adam adam({{"p", p}}, {.lr = 0.1});
    p.grad_mut()[0] = 1;
    adam.step();
    // m_hat = 1, v_hat = 1 after bias correction
    CHECK(p.values()[0] == doctest::Approx(-0.1 / (1 + 1e-8)).epsilon(1e-14));
  }
  SUBCASE("two steps on a quadratic decrease the loss monotonically") {
    auto p = Tensor::parameter({2}, {1.5, -0.7});
    Adam adam({{"p", p}}, {.lr = 0.05});
    auto loss = [&] {
      Tape tape;
      auto l = sum(tape, square(tape, p));
      double v = l.item();
      adam.zero_grad();
      tape.backward(l);
      return v;
    };
    double l0 = loss();
    adam.step();
    double l1 = loss();
    adam.step();
    double l2 = loss();
    CHECK(l1 < l0);
    CHECK(l2 < l1);
  }
  SUBCASE("missing gradient is a usage error") {
    auto p = Tensor::parameter({1}, {0});
    Adam adam({{"p", p}}, {});
    CHECK_THROWS_AS(adam.step(), UsageError);
  }
  SUBCASE("state round-trips through named tensors") {
    auto p = Tensor::parameter({2}, {0.5, 0.25});
    Adam a({{"p", p}}, {.lr = 0.01});
    p.grad_mut()[0] = 0.3;
    p.grad_mut()[1] = -0.2;
    a.step();
    auto q = Tensor::parameter({2}, {0.5, 0.25});
    Adam b({{"p", q}}, {.lr = 0.01});
    b.load_state(a.state("opt"), "opt");
    CHECK(b.step_count() == 1);
    auto sa = a.state("opt"), sb = b.state("opt");
    for (std::size_t k = 0; k < sa.size(); ++k)
      for (std::size_t i = 0; i < sa[k].second.size(); ++i)
        CHECK(sa[k].second.values()[i] == sb[k].second.values()[i]);
  }
}

TEST_CASE("positional_encode examples and bounds") {
  auto a = positional_encode(std::vector<Real>{0}, 2);
  REQUIRE(a.size() == 4);
  CHECK(a[0] == 0);
  CHECK(a[1] == 1);
  CHECK(a[2] == 0);
  CHECK(a[3] == 1);

  auto b = positional_encode(std::vector<Real>{0.5}, 1);
  CHECK(b[0] == doctest::Approx(1).epsilon(1e-15));
  CHECK(std::abs(b[1]) < 1e-15);

  const std::vector<Real> v = {0.3, -0.2};
  auto c = positional_encode(v, 10);
  REQUIRE(c.size() == 40);
  std::size_t k = 0;
  for (double x : v) {
    for (int l = 0; l < 10; ++l) {
      const double f = std::ldexp(std::numbers::pi, l);
      CHECK(std::abs(c[k++] - std::sin(f * x)) < 1e-12);
      CHECK(std::abs(c[k++] - std::cos(f * x)) < 1e-12);
    }
  }

  std::mt19937_64 rng(4);
  auto wide = test::random_values(rng, 200, -50, 50);
  for (auto e : positional_encode(wide, 10)) CHECK((e >= -1 && e <= 1));
  CHECK_THROWS_AS(positional_encode(v, 0), UsageError);
}

TEST_CASE("tape evaluation is deterministic") {
  MlpSpec spec{{6, 16, 16, 4}, {Activation::ReLU, Activation::ReLU, Activation::None}, 77};
  Mlp a(spec, "a"), b(spec, "b");
  std::mt19937_64 rng(1);
  auto x = Tensor::from({8, 6}, test::random_values(rng, 48));
  Tape t1, t2;
  auto ya = a.forward(t1, x), yb = b.forward(t2, x);
  for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya.values()[i] == yb.values()[i]);
}

TEST_CASE("products do not depend on buffer alignment") {
  // Copies of the same operands land at different heap offsets; values and
  // gradients of a GEMV-shaped layer must still agree bit for bit.
  std::mt19937_64 rng(4);
  const auto xv = test::random_values(rng, 300 * 17);
  const auto wv = test::random_values(rng, 17);
  std::vector<Real> first_y, first_gw;
  std::vector<std::vector<char>> padding;
  for (int trial = 0; trial < 12; ++trial) {
    padding.emplace_back(8 * trial + 8);
    Tape tape;
    auto x = Tensor::parameter({300, 17}, xv);
    auto w = Tensor::parameter({17, 1}, wv);
    auto b = Tensor::parameter({1}, {0.25});
    auto y = linear(tape, x, w, b);
    tape.backward(sum(tape, square(tape, y)));
    const std::vector<Real> yv(y.values().begin(), y.values().end());
    const std::vector<Real> gw(w.grad().begin(), w.grad().end());
    if (trial == 0) {
      first_y = yv;
      first_gw = gw;
    }
    CHECK(yv == first_y);
    CHECK(gw == first_gw);
  }
}

TEST_CASE("checkpoint container") {
  std::mt19937_64 rng(3);
  NamedTensors tensors = {
      {"renderer/coarse/layer0/weight", Tensor::from({3, 4}, test::random_values(rng, 12, -1e3, 1e3))},
      {"transition/scale", Tensor::from({}, {1e-300})},
      {"empty", Tensor::from({0, 3}, {})},
  };
  std::stringstream buf;
  write_tensors(buf, tensors);
  auto back = read_tensors(buf);
  REQUIRE(back.size() == tensors.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].first == tensors[k].first);
    CHECK(back[k].second.shape() == tensors[k].second.shape());
    for (std::size_t i = 0; i < back[k].second.size(); ++i)
      CHECK(back[k].second.values()[i] == tensors[k].second.values()[i]);
  }

  SUBCASE("bad magic") {
    std::stringstream bad("NOTATENSORFILE");
    CHECK_THROWS_AS(read_tensors(bad), IoError);
  }
  SUBCASE("version mismatch") {
    auto bytes = buf.str();
    bytes[8] = 9;
    std::stringstream in(bytes);
    CHECK_THROWS_AS(read_tensors(in), IoError);
  }
  SUBCASE("truncated payload") {
    auto bytes = buf.str();
    std::stringstream in(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_tensors(in), IoError);
  }
  SUBCASE("assign by prefix") {
    NamedTensors dst = {{"layer0/weight", Tensor::parameter({3, 4}, std::vector<Real>(12))}};
    CHECK(assign_named(tensors, dst, "renderer/coarse/") == 1);
    CHECK(dst[0].second.values()[5] == tensors[0].second.values()[5]);
    NamedTensors wrong = {{"layer0/weight", Tensor::parameter({4, 3}, std::vector<Real>(12))}};
    CHECK_THROWS_AS(assign_named(tensors, wrong, "renderer/coarse/"), IoError);
  }
}
