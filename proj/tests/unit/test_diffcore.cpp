#include <doctest.h>

#include <cmath>
#include <fstream>

#include "ramdepth/checkpoint.hpp"
#include "ramdepth/nn.hpp"
#include "test_support.hpp"

using namespace ramdepth;
using testing::random_tensor;

namespace {

// Direct nested-loop convolution.
std::vector<double> conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const auto o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const auto ho = (h + 2 * pad - kh) / stride + 1, wo = (wd + 2 * pad - kw) / stride + 1;
  std::vector<double> out;
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t oc = 0; oc < o; ++oc)
      for (std::int64_t y = 0; y < ho; ++y)
        for (std::int64_t xo = 0; xo < wo; ++xo) {
          double acc = b.data()[oc];
          for (std::int64_t ic = 0; ic < c; ++ic)
            for (std::int64_t dy = 0; dy < kh; ++dy)
              for (std::int64_t dx = 0; dx < kw; ++dx) {
                const auto iy = y * stride - pad + dy, ix = xo * stride - pad + dx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += double(x.at({in, ic, iy, ix})) * w.at({oc, ic, dy, dx});
              }
          out.push_back(acc);
        }
  return out;
}

double sigmoid_d(double v) { return 1 / (1 + std::exp(-v)); }

// Scalar three-gate GRU on a single pixel grid with "same" padding.
std::vector<double> gru_oracle(const Tensor& x, const Tensor& h, const GruWeights& g, IntPair k) {
  const auto cx = x.dim(1), ch = h.dim(1), hh = x.dim(2), ww = x.dim(3);
  auto cat_at = [&](const std::vector<double>& hv, std::int64_t c, std::int64_t y, std::int64_t xx) -> double {
    if (y < 0 || y >= hh || xx < 0 || xx >= ww) return 0.0;
    if (c < cx) return x.at({0, c, y, xx});
    return hv[static_cast<std::size_t>(((c - cx) * hh + y) * ww + xx)];
  };
  auto conv = [&](const Tensor& w, const Tensor& b, const std::vector<double>& hv, std::int64_t o, std::int64_t y,
                  std::int64_t xx) {
    double acc = b.data()[o];
    for (std::int64_t c = 0; c < cx + ch; ++c)
      for (int dy = 0; dy < k[0]; ++dy)
        for (int dx = 0; dx < k[1]; ++dx)
          acc += w.at({o, c, dy, dx}) * cat_at(hv, c, y + dy - k[0] / 2, xx + dx - k[1] / 2);
    return acc;
  };
  std::vector<double> hv(h.data().begin(), h.data().end()), z(hv.size()), rh(hv.size()), out(hv.size());
  for (std::int64_t o = 0; o < ch; ++o)
    for (std::int64_t y = 0; y < hh; ++y)
      for (std::int64_t xx = 0; xx < ww; ++xx) {
        const auto i = static_cast<std::size_t>((o * hh + y) * ww + xx);
        z[i] = sigmoid_d(conv(g.update_weight, g.update_bias, hv, o, y, xx));
        rh[i] = sigmoid_d(conv(g.reset_weight, g.reset_bias, hv, o, y, xx)) * hv[i];
      }
  for (std::int64_t o = 0; o < ch; ++o)
    for (std::int64_t y = 0; y < hh; ++y)
      for (std::int64_t xx = 0; xx < ww; ++xx) {
        const auto i = static_cast<std::size_t>((o * hh + y) * ww + xx);
        const double cand = std::tanh(conv(g.cand_weight, g.cand_bias, rh, o, y, xx));
        out[i] = (1 - z[i]) * hv[i] + z[i] * cand;
      }
  return out;
}

GruWeights random_gru(std::int64_t in, std::int64_t hid, IntPair k, Rng& rng) {
  Shape ws{hid, in + hid, k[0], k[1]};
  return {random_tensor(ws, rng, -0.4, 0.4), random_tensor({hid}, rng), random_tensor(ws, rng, -0.4, 0.4),
          random_tensor({hid}, rng), random_tensor(ws, rng, -0.4, 0.4), random_tensor({hid}, rng)};
}

GruWeights zero_gru(std::int64_t in, std::int64_t hid, IntPair k) {
  Shape ws{hid, in + hid, k[0], k[1]};
  return {Tensor::zeros(ws), Tensor::zeros({hid}), Tensor::zeros(ws),
          Tensor::zeros({hid}), Tensor::zeros(ws), Tensor::zeros({hid})};
}

}  // namespace

TEST_CASE("conv2d") {
  SUBCASE("1x1 kernel of 2 doubles the input") {
    const Tensor y = conv2d(Tensor::full({1, 1, 3, 3}, 1), Tensor::full({1, 1, 1, 1}, 2), std::nullopt);
    CHECK(y.shape() == Shape{1, 1, 3, 3});
    for (real v : y.data()) CHECK(v == 2.0f);
  }
  SUBCASE("zero weights give the bias") {
    Rng rng(1);
    const Tensor y = conv2d(random_tensor({1, 2, 5, 4}, rng), Tensor::zeros({1, 2, 3, 3}), Tensor::full({1}, 7));
    for (real v : y.data()) CHECK(v == 7.0f);
  }
  SUBCASE("matches the nested-loop oracle") {
    Rng rng(2);
    for (int stride : {1, 2}) {
      const Tensor x = random_tensor({1, 2, 4, 4}, rng), w = random_tensor({3, 2, 3, 3}, rng),
                   b = random_tensor({3}, rng);
      const Tensor y = conv2d(x, w, b, {stride, stride}, {1, 1});
      const auto expect = conv_oracle(x, w, b, stride, 1);
      REQUIRE(y.numel() == static_cast<std::int64_t>(expect.size()));
      for (std::size_t i = 0; i < expect.size(); ++i) CHECK(y.data()[i] == doctest::Approx(expect[i]).epsilon(1e-5));
    }
  }
  SUBCASE("output size") {
    const Tensor y = conv2d(Tensor::zeros({1, 1, 7, 9}), Tensor::zeros({2, 1, 3, 5}), std::nullopt, {2, 2}, {1, 0});
    CHECK(y.shape() == Shape{1, 2, 4, 3});
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 3, 4, 4}), Tensor::zeros({1, 2, 3, 3}), std::nullopt), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({2})), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 2, 3, 3}), std::nullopt, {0, 1}),
                    ShapeError);
  }
}

TEST_CASE("activations") {
  const Tensor r = relu(Tensor::from_data({3}, {-1, 0, 2}));
  CHECK(std::vector<real>(r.data().begin(), r.data().end()) == std::vector<real>{0, 0, 2});
  CHECK(sigmoid(Tensor::scalar(0.5f)).item() == doctest::Approx(0.62245933).epsilon(1e-7));
  const Tensor s = softmax(Tensor::zeros({3}), 0);
  for (real v : s.data()) CHECK(v == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(softmax(Tensor::zeros({3}), 1), ShapeError);
  CHECK_THROWS_AS(activation(ActivationKind::kSoftmax, Tensor::zeros({3})), ShapeError);

  Rng rng(3);
  const Tensor big = random_tensor({4, 7, 5}, rng, -40, 40);
  const Tensor p = softmax(big, 1);
  for (std::int64_t a = 0; a < 4; ++a)
    for (std::int64_t c = 0; c < 5; ++c) {
      double sum = 0;
      for (std::int64_t b = 0; b < 7; ++b) sum += p.at({a, b, c});
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("norm2d") {
  SUBCASE("constant input normalizes to zero") {
    const Tensor y = norm2d(Tensor::full({1, 8, 2, 2}, 3), Tensor::full({8}, 1), Tensor::zeros({8}));
    for (real v : y.data()) CHECK(v == 0.0f);
  }
  SUBCASE("two-value channel in batch-stat mode") {
    const Tensor y = norm2d(Tensor::from_data({1, 1, 1, 2}, {1, 3}), Tensor::full({1}, 1), Tensor::zeros({1}),
                            NormMode::kBatchStat);
    CHECK(y.data()[0] == doctest::Approx(-1).epsilon(1e-4));
    CHECK(y.data()[1] == doctest::Approx(1).epsilon(1e-4));
  }
  SUBCASE("zero gamma gives beta") {
    Rng rng(4);
    const Tensor y = norm2d(random_tensor({1, 4, 3, 3}, rng), Tensor::zeros({4}), Tensor::full({4}, 5), NormMode::kGroup, 2);
    for (real v : y.data()) CHECK(v == 5.0f);
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(norm2d(Tensor::zeros({1, 4, 2, 2}), Tensor::zeros({3}), Tensor::zeros({3})), ShapeError);
  }
}

TEST_CASE("grid_sample_bilinear") {
  const Tensor feat = Tensor::from_data({1, 1, 2, 2}, {0, 1, 2, 3});
  auto at = [&](real u, real v) { return grid_sample_bilinear(feat, Tensor::from_data({1, 2, 1, 1}, {u, v})).item(); };
  CHECK(at(0.5f, 0.5f) == doctest::Approx(1.5));
  CHECK(at(0, 0) == 0.0f);
  CHECK(at(1, 1) == 3.0f);
  CHECK(at(-10, -10) == 0.0f);
  CHECK(at(0.5f, 0) == doctest::Approx(0.5));

  Rng rng(5);
  const Tensor f = random_tensor({1, 3, 5, 6}, rng);
  std::vector<real> coords;
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 6; ++u) coords.push_back(real(u));
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 6; ++u) coords.push_back(real(v));
  const Tensor s = grid_sample_bilinear(f, Tensor::from_data({1, 2, 5, 6}, coords));
  for (std::size_t i = 0; i < s.data().size(); ++i) CHECK(s.data()[i] == f.data()[i]);
}

TEST_CASE("conv_gru") {
  Rng rng(6);
  SUBCASE("zero weights halve the hidden state") {
    const Tensor h = random_tensor({1, 2, 3, 4}, rng, -0.9, 0.9);
    const Tensor out = conv_gru(random_tensor({1, 3, 3, 4}, rng), h, zero_gru(3, 2, {1, 5}), {1, 5});
    for (std::size_t i = 0; i < h.data().size(); ++i) CHECK(out.data()[i] == doctest::Approx(0.5 * h.data()[i]));
  }
  SUBCASE("saturated update gate with zero candidate gives zero") {
    GruWeights g = zero_gru(3, 2, {1, 1});
    g.update_bias = Tensor::full({2}, 50);
    const Tensor out = conv_gru(random_tensor({1, 3, 2, 2}, rng), Tensor::zeros({1, 2, 2, 2}), g, {1, 1});
    for (real v : out.data()) CHECK(v == 0.0f);
  }
  SUBCASE("matches the scalar formula") {
    for (const IntPair k : {IntPair{1, 5}, IntPair{5, 1}, IntPair{3, 3}}) {
      const Tensor x = random_tensor({1, 3, 4, 6}, rng), h = random_tensor({1, 2, 4, 6}, rng, -0.99, 0.99);
      const GruWeights g = random_gru(3, 2, k, rng);
      const Tensor out = conv_gru(x, h, g, k);
      const auto expect = gru_oracle(x, h, g, k);
      for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(out.data()[i] == doctest::Approx(expect[i]).epsilon(1e-5));
        CHECK(std::abs(out.data()[i]) < 1.0f);
      }
    }
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(conv_gru(Tensor::zeros({1, 3, 4, 4}), Tensor::zeros({1, 2, 4, 5}), zero_gru(3, 2, {1, 1}), {1, 1}),
                    ShapeError);
  }
}

TEST_CASE("backward") {
  SUBCASE("sum gives ones") {
    Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    Tape tape;
    {
      TapeScope scope(tape);
      backward(sum_all(x), tape);
    }
    for (real g : x.grad()) CHECK(g == 1.0f);
  }
  SUBCASE("sum of squares") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    Tape tape;
    {
      TapeScope scope(tape);
      backward(sum_all(mul(x, x)), tape);
    }
    CHECK(x.grad()[0] == 2.0f);
    CHECK(x.grad()[1] == 4.0f);
  }
  SUBCASE("leaf off the path gets a zero gradient") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true), y = Tensor::from_data({2}, {3, 4}, true);
    Tape tape;
    {
      TapeScope scope(tape);
      Tensor unused = mul(y, y);
      (void)unused;
      backward(sum_all(x), tape);
    }
    REQUIRE(y.has_grad());
    for (real g : y.grad()) CHECK(g == 0.0f);
  }
  SUBCASE("non-scalar loss") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    Tape tape;
    TapeScope scope(tape);
    const Tensor y = mul(x, x);
    CHECK_THROWS_AS(backward(y, tape), ShapeError);
  }
  SUBCASE("replaying a graph gives bit-identical gradients") {
    Rng rng(7);
    const Tensor x0 = random_tensor({1, 2, 5, 5}, rng), w0 = random_tensor({3, 2, 3, 3}, rng);
    auto run = [&] {
      Tensor x = x0.clone(), w = w0.clone();
      x.set_requires_grad(true);
      w.set_requires_grad(true);
      Tape tape;
      TapeScope scope(tape);
      backward(sum_all(ramdepth::tanh(conv2d(x, w, std::nullopt, {1, 1}, {1, 1}))), tape);
      return std::vector<real>(w.grad().begin(), w.grad().end());
    };
    CHECK(run() == run());
  }
  SUBCASE("nothing is recorded without a tape") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    const Tensor y = mul(x, x);
    CHECK(active_tape() == nullptr);
    CHECK_FALSE(y.requires_grad());
  }
}

TEST_CASE("shape ops") {
  const Tensor a = Tensor::from_data({1, 2, 1, 2}, {1, 2, 3, 4});
  const Tensor b = Tensor::from_data({1, 1, 1, 2}, {5, 6});
  const Tensor c = concat({a, b}, 1);
  CHECK(c.shape() == Shape{1, 3, 1, 2});
  CHECK(c.at({0, 2, 0, 1}) == 6.0f);
  CHECK(slice(c, 1, 1, 2).at({0, 0, 0, 0}) == 3.0f);
  CHECK(tile(b, 1, 3).shape() == Shape{1, 3, 1, 2});
  CHECK(sum(c, 1).at({0, 0, 0, 1}) == 12.0f);
  CHECK(mean_all(c).item() == doctest::Approx(3.5));
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(reshape(a, {3}), ShapeError);
  CHECK_THROWS_AS(slice(a, 1, 1, 2), ShapeError);
}

TEST_CASE("checkpoint round trip") {
  testing::TempDir dir("ckpt");
  Rng rng(8);
  ParameterStore a, b;
  a.add("layer.weight", random_tensor({2, 3, 3, 3}, rng));
  a.add("layer.bias", random_tensor({2}, rng));
  b.add("layer.weight", Tensor::zeros({2, 3, 3, 3}));
  b.add("layer.bias", Tensor::zeros({2}));
  save_checkpoint(dir / "m.ckpt", a);
  load_checkpoint(dir / "m.ckpt", b);
  CHECK(a.values_equal(b));

  const auto entries = read_checkpoint(dir / "m.ckpt");
  CHECK(entries.size() == 2);
  CHECK(entries.at("layer.bias").shape == Shape{2});

  ParameterStore wrong;
  wrong.add("layer.weight", Tensor::zeros({2, 3, 1, 1}));
  wrong.add("layer.bias", Tensor::zeros({2}));
  CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt", wrong), ShapeError);

  {
    std::ofstream f(dir / "bad.ckpt", std::ios::binary);
    f << "RAMD\x01";
  }
  CHECK_THROWS_AS(read_checkpoint(dir / "bad.ckpt"), ParseError);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.ckpt"), IoError);
}
