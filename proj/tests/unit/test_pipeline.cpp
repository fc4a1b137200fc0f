#include <doctest.h>

#include "ramdepth/pipeline.hpp"
#include "ramdepth/synthdata.hpp"
#include "test_support.hpp"

using namespace ramdepth;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.encoder.base_channels = 8;
  c.encoder.feature_dim = 16;
  c.encoder.context_dim = 16;
  c.hidden_dim = 8;
  c.neighborhood = 3;
  return c;
}

Scene small_scene(std::uint64_t seed, int views = 5) {
  SceneSpec spec;
  spec.seed = seed;
  spec.width = 32;
  spec.height = 24;
  spec.n_views = views;
  return generate_scene(spec);
}

std::vector<View> sources_of(const Scene& s) { return {s.views.begin() + 1, s.views.end()}; }

CorrelationSample constant_sample(const std::string& id, real value) {
  return {Tensor::full({1, 9, 2, 2}, value), id, 1};
}

}  // namespace

TEST_CASE("round-robin schedule") {
  CHECK(schedule(1, 4) == 0);
  for (int s = 1; s <= 40; ++s) CHECK(schedule(s, 4) == static_cast<std::size_t>((s - 1) % 4));
  for (int s = 1; s <= 10; ++s) CHECK(schedule(s, 1) == 0);
  CHECK_THROWS(schedule(1, 0));
  CHECK_THROWS(schedule(0, 2));
}

TEST_CASE("inference runs cycles times sources steps and encodes once per view") {
  RamDepthModel model(small_config());
  const Scene scene = small_scene(1);
  model.feature_encoder().reset_invocations();
  model.context_encoder().reset_invocations();
  const InferenceResult r = run_inference(model, scene.views[0], sources_of(scene), 10);
  CHECK(r.depth_sequence.size() == 40);
  CHECK(model.feature_encoder().invocations() == 5);
  CHECK(model.context_encoder().invocations() == 1);
  for (const auto& d : r.depth_sequence) CHECK(d.shape() == Shape{1, 1, 24, 32});
  for (std::size_t i = 0; i < 40; ++i) CHECK(r.step_sources[i] == scene.views[1 + i % 4].id);
  CHECK(r.last_correlation.size() == 4);
  CHECK(r.last_correlation[3].iteration == 40);
  CHECK(r.ranking.ordering.size() == 4);
  CHECK(&r.final_depth() == &r.depth_sequence.back());
}

TEST_CASE("zero-parameter model predicts zero depth") {
  RamDepthModel model(small_config());
  model.parameters().fill(0);
  const Scene scene = small_scene(2, 3);
  const InferenceResult r = run_inference(model, scene.views[0], sources_of(scene), 2);
  for (const auto& d : r.depth_sequence)
    for (real v : d.data()) CHECK(v == 0.0f);
}

TEST_CASE("inference rejects bad inputs") {
  RamDepthModel model(small_config());
  const Scene scene = small_scene(3, 3);
  CHECK_THROWS(run_inference(model, scene.views[0], {}, 2));
  CHECK_THROWS(run_inference(model, scene.views[0], sources_of(scene), 0));
  std::vector<View> degenerate{scene.views[0]};
  CHECK_THROWS_AS(run_inference(model, scene.views[0], degenerate, 1), DegenerateBaselineError);
  View odd = scene.views[1];
  odd.image = Tensor::zeros({1, 3, 20, 32});
  CHECK_THROWS(run_inference(model, scene.views[0], {odd}, 1));
}

TEST_CASE("ranking") {
  SUBCASE("descending order") {
    const auto r = rank_correlations({constant_sample("A", 0.9f), constant_sample("B", 0.2f), constant_sample("C", 0.5f)});
    CHECK(r.ordering == std::vector<std::string>{"A", "C", "B"});
    CHECK(r.score_of("C") == doctest::Approx(0.5));
    CHECK(r.position_of("B") == 2);
  }
  SUBCASE("ties keep input order") {
    const auto r = rank_correlations({constant_sample("A", 0.1f), constant_sample("B", 0.7f), constant_sample("C", 0.7f)});
    CHECK(r.ordering == std::vector<std::string>{"B", "C", "A"});
  }
  SUBCASE("centre reduction reads the zero-offset channel") {
    CorrelationSample a = constant_sample("A", 0), b = constant_sample("B", 0);
    a.scores.mutable_data()[4 * 4] = 8;  // channel 4, first pixel
    b.scores.mutable_data()[0] = 20;     // channel 0
    const auto all = rank_correlations({a, b}, RankingReduction::kAllSamples, 3);
    const auto center = rank_correlations({a, b}, RankingReduction::kCenterSample, 3);
    CHECK(all.ordering.front() == "B");
    CHECK(center.ordering.front() == "A");
    CHECK(center.score_of("A") == doctest::Approx(2.0));
  }
  SUBCASE("duplicated sources tie") {
    // Each score comes from that source's last visit; with the depth and
    // offset heads zeroed the state is stationary between visits.
    RamDepthModel model(small_config());
    for (const char* name : {"update.delta1.weight", "update.delta1.bias", "offsets.head.weight"}) {
      Tensor t = model.parameters().get(name);
      std::fill(t.mutable_data().begin(), t.mutable_data().end(), real(0));
    }
    const Scene scene = small_scene(4, 2);
    View copy = scene.views[1];
    copy.id = "copy";
    const InferenceResult r = run_inference(model, scene.views[0], {scene.views[1], copy}, 3);
    const double a = r.ranking.score_of(scene.views[1].id), b = r.ranking.score_of("copy");
    CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
    CHECK(r.ranking.ordering.front() == scene.views[1].id);
  }
}

TEST_CASE("pruning") {
  RamDepthModel model(small_config());
  const Scene scene = small_scene(5, 4);
  const auto sources = sources_of(scene);
  const InferenceResult full = run_inference(model, scene.views[0], sources, 2);
  const Metrics m = compute_metrics(full.final_depth(), scene.depths[0], valid_depth_mask(scene.depths[0]));
  for (PruneMode mode : {PruneMode::kRanked, PruneMode::kRandom}) {
    const PruneOutcome p = prune_and_eval(model, scene.views[0], sources, scene.depths[0], 3, mode, 7, 2);
    CHECK(p.metrics.mae == m.mae);
    CHECK(p.metrics.rmse == m.rmse);
    CHECK(p.kept.size() == 3);
  }
  const PruneOutcome ranked = prune_and_eval(model, scene.views[0], sources, scene.depths[0], 1, PruneMode::kRanked, 0, 2);
  CHECK(ranked.kept == std::vector<std::string>{full.ranking.ordering.front()});
  const PruneOutcome r1 = prune_and_eval(model, scene.views[0], sources, scene.depths[0], 1, PruneMode::kRandom, 11, 2);
  const PruneOutcome r2 = prune_and_eval(model, scene.views[0], sources, scene.depths[0], 1, PruneMode::kRandom, 11, 2);
  CHECK(r1.kept == r2.kept);
  CHECK(r1.metrics.mae == r2.metrics.mae);
  CHECK_THROWS(prune_and_eval(model, scene.views[0], sources, scene.depths[0], 0, PruneMode::kRanked, 0, 2));
  CHECK_THROWS(prune_and_eval(model, scene.views[0], sources, scene.depths[0], 4, PruneMode::kRanked, 0, 2));
}

TEST_CASE("blur experiment bookkeeping") {
  RamDepthModel model(small_config());
  const Scene scene = small_scene(6, 4);
  const BlurOutcome b = blur_experiment(model, scene.views[0], sources_of(scene), 2, 3.0, 2);
  REQUIRE(b.blurred.size() == 2);
  CHECK(b.blurred[0] == b.before.ordering[0] + "_blur");
  CHECK(b.blurred[1] == b.before.ordering[1] + "_blur");
  CHECK(b.after.ordering.size() == 5);
  CHECK(b.demoted.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const bool below = b.after.position_of(b.blurred[i]) > b.after.position_of(b.before.ordering[i]);
    CHECK(b.demoted[i] == below);
  }

  const BlurOutcome c =
      blur_experiment(model, scene.views[0], sources_of(scene), 2, 3.0, 2, RankingReduction::kCenterSample);
  const RankingReport center = rank_sources(run_inference(model, scene.views[0], sources_of(scene), 2),
                                            RankingReduction::kCenterSample, small_config().neighborhood);
  for (const auto& e : center.entries) CHECK(c.before.score_of(e.source_id) == e.score);
}

TEST_CASE("output scales with the scene") {
  RamDepthModel model(small_config());
  const Scene scene = small_scene(7, 3);
  const InferenceResult base = run_inference(model, scene.views[0], sources_of(scene), 2);
  for (double s : {0.1, 10.0}) {
    const Scene scaled = scale_scene(scene, s);
    const InferenceResult r = run_inference(model, scaled.views[0], sources_of(scaled), 2);
    double worst = 0;
    for (std::size_t i = 0; i < base.final_depth().data().size(); ++i) {
      const double a = base.final_depth().data()[i] * s, b = r.final_depth().data()[i];
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-12));
    }
    CHECK(worst < 1e-5);
    CHECK(r.scale == doctest::Approx(base.scale * s));
  }
}
