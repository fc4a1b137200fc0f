#include <doctest.h>

#include "ramdepth/model.hpp"
#include "test_support.hpp"

using namespace ramdepth;
using testing::random_tensor;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

TEST_CASE("encoder output shape") {
  RamDepthModel model(ModelConfig::toy());
  Rng rng(1);
  const Tensor img = random_tensor({1, 3, 64, 48}, rng, 0, 1);
  CHECK(model.feature_encoder()(img).shape() == Shape{1, 64, 8, 6});
  CHECK(model.context_encoder()(img).shape() == Shape{1, 64, 8, 6});

  ModelConfig wide = ModelConfig::toy();
  wide.encoder.feature_dim = 24;
  wide.encoder.context_dim = 40;
  wide.encoder.downsample_factor = 4;
  RamDepthModel other(wide);
  CHECK(other.feature_encoder()(img).shape() == Shape{1, 24, 16, 12});
  CHECK(other.context_encoder()(img).shape() == Shape{1, 40, 16, 12});
}

TEST_CASE("encoder is deterministic and shared across views") {
  RamDepthModel model(ModelConfig::toy());
  Rng rng(2);
  const Tensor a = random_tensor({1, 3, 32, 40}, rng, 0, 1);
  const Tensor fa = model.feature_encoder()(a), fb = model.feature_encoder()(a.clone());
  CHECK(std::equal(fa.data().begin(), fa.data().end(), fb.data().begin()));
}

TEST_CASE("zero image with zero biases gives zero features") {
  RamDepthModel model(ModelConfig::toy());
  for (const auto& [name, p] : model.parameters().all()) {
    if (ends_with(name, ".bias") || ends_with(name, ".beta")) {
      Tensor t = p;
      for (auto& v : t.mutable_data()) v = 0;
    }
  }
  const Tensor zero = Tensor::zeros({1, 3, 16, 24});
  for (const Encoder* e : {&model.feature_encoder(), &model.context_encoder()}) {
    const Tensor f = (*e)(zero);
    for (real v : f.data()) CHECK(v == 0.0f);
  }
}

TEST_CASE("context and feature encoders have disjoint parameters") {
  RamDepthModel model(ModelConfig::toy());
  Rng rng(3);
  const Tensor img = random_tensor({1, 3, 16, 16}, rng, 0, 1);
  const Tensor f = model.feature_encoder()(img), c = model.context_encoder()(img);
  REQUIRE(f.shape() == c.shape());
  CHECK_FALSE(std::equal(f.data().begin(), f.data().end(), c.data().begin()));
  std::size_t fnet = 0, cnet = 0;
  for (const auto& [name, p] : model.parameters().all()) {
    fnet += name.rfind("fnet.", 0) == 0;
    cnet += name.rfind("cnet.", 0) == 0;
  }
  CHECK(fnet == cnet);
  CHECK(fnet > 0);
}

TEST_CASE("encoder rejects indivisible sizes") {
  RamDepthModel model(ModelConfig::toy());
  CHECK_THROWS_AS(model.feature_encoder()(Tensor::zeros({1, 3, 60, 48})), ShapeError);
  CHECK_THROWS_AS(model.feature_encoder()(Tensor::zeros({1, 1, 64, 48})), ShapeError);
}

TEST_CASE("encoder configuration") {
  EncoderConfig c;
  c.downsample_factor = 6;
  CHECK_THROWS(c.validate());
  c.downsample_factor = 8;
  c.feature_dim = 0;
  CHECK_THROWS(c.validate());
  CHECK(encoder_stage_width(32, 0) == 32);
  CHECK(encoder_stage_width(32, 2) == 64);
}

TEST_CASE("toy parameter count is stable") {
  RamDepthModel a(ModelConfig::toy());
  ModelConfig other_seed = ModelConfig::toy();
  other_seed.init_seed = 99;
  RamDepthModel b(other_seed);
  CHECK(a.parameters().scalar_count() == 639586);
  CHECK(b.parameters().scalar_count() == a.parameters().scalar_count());
  CHECK_FALSE(a.parameters().values_equal(b.parameters()));
}

TEST_CASE("invocation counter") {
  RamDepthModel model(ModelConfig::toy());
  const Tensor img = Tensor::zeros({1, 3, 16, 16});
  model.feature_encoder().reset_invocations();
  (void)model.feature_encoder()(img);
  (void)model.feature_encoder()(img);
  CHECK(model.feature_encoder().invocations() == 2);
  CHECK(model.context_encoder().invocations() == 0);
}
