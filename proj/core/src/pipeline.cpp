#include "ramdepth/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ramdepth/synthdata.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

std::size_t schedule(int step, std::size_t n_sources) {
  if (n_sources == 0) throw std::invalid_argument("schedule: no source views");
  if (step < 1) throw std::invalid_argument("schedule: steps are 1-based");
  return static_cast<std::size_t>(step - 1) % n_sources;
}

double RankingReport::score_of(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.source_id == id) return e.score;
  }
  throw std::out_of_range("no ranking entry for source '" + id + "'");
}

std::size_t RankingReport::position_of(const std::string& id) const {
  auto it = std::find(ordering.begin(), ordering.end(), id);
  if (it == ordering.end()) throw std::out_of_range("source '" + id + "' not ranked");
  return static_cast<std::size_t>(it - ordering.begin());
}

RankingReport rank_correlations(const std::vector<CorrelationSample>& last_samples, RankingReduction reduction,
                                int neighborhood) {
  RankingReport report;
  for (std::size_t i = 0; i < last_samples.size(); ++i) {
    const auto& s = last_samples[i];
    const auto d = s.scores.data();
    double total = 0;
    std::size_t count = 0;
    if (reduction == RankingReduction::kAllSamples) {
      for (real v : d) total += v;
      count = d.size();
    } else {
      const std::int64_t plane = s.scores.dim(2) * s.scores.dim(3);
      const std::int64_t center = center_sample_index(neighborhood);
      for (std::int64_t p = 0; p < plane; ++p) total += d[static_cast<std::size_t>(center * plane + p)];
      count = static_cast<std::size_t>(plane);
    }
    report.entries.push_back({s.source_id, total / static_cast<double>(count), i});
  }
  std::vector<RankingEntry> sorted = report.entries;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RankingEntry& a, const RankingEntry& b) { return a.score > b.score; });
  for (const auto& e : sorted) report.ordering.push_back(e.source_id);
  return report;
}

namespace {

void validate_views(const std::vector<View>& views, int factor) {
  if (views.size() < 2) throw std::invalid_argument("inference needs a reference and at least one source view");
  const auto& ref = views.front();
  for (const auto& v : views) {
    if (v.image.rank() != 4 || v.image.dim(1) != 3) {
      throw ShapeError("view '" + v.id + "' image must be 1x3xHxW, got " + shape_str(v.image.shape()));
    }
    if (v.height() != ref.height() || v.width() != ref.width()) {
      throw ShapeError("view '" + v.id + "' size differs from the reference");
    }
    if (v.height() % factor != 0 || v.width() % factor != 0) {
      throw ShapeError("view '" + v.id + "' size is not divisible by " + std::to_string(factor));
    }
    v.camera.intrinsics.validate();
    v.camera.pose.validate();
  }
}

}  // namespace

NormalizedRun run_normalized(const RamDepthModel& model, const std::vector<View>& views, int cycles) {
  const int factor = model.config().encoder.downsample_factor;
  validate_views(views, factor);
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  const std::size_t n_sources = views.size() - 1;

  std::vector<Tensor> features;
  features.reserve(views.size());
  for (const auto& v : views) features.push_back(model.feature_encoder()(v.image));
  const Tensor context = model.context_encoder()(views.front().image);

  const std::int64_t hc = features.front().dim(2), wc = features.front().dim(3);
  NormalizedRun run;
  run.last_correlation.resize(n_sources);
  DepthState state = DepthState::initial(hc, wc, model.config().hidden_dim);
  const int total_steps = cycles * static_cast<int>(n_sources);
  for (int step = 1; step <= total_steps; ++step) {
    const std::size_t src = schedule(step, n_sources);
    const View& source = views[src + 1];
    const OffsetField offsets = model.offset_predictor()(context, state.hidden, state.depth);
    Tensor scores = sample_correlation(features.front(), features[src + 1], state.depth, views.front().camera,
                                       source.camera, factor, offsets);
    state = model.recurrent_block()(scores, context, state);
    const UpsampleMask mask = model.upmask_predictor()(state.hidden, context);
    run.depth_sequence.push_back(convex_upsample(state.depth, mask));
    run.step_sources.push_back(source.id);
    run.last_correlation[src] = {std::move(scores), source.id, step};
  }
  run.final_state = std::move(state);
  return run;
}

InferenceResult run_inference(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                              int cycles) {
  if (sources.empty()) throw std::invalid_argument("run_inference: at least one source view is required");
  std::vector<View> views;
  views.reserve(sources.size() + 1);
  views.push_back(reference);
  views.insert(views.end(), sources.begin(), sources.end());
  const PoseNormalization norm = normalize_poses(views);
  NormalizedRun run = run_normalized(model, norm.views, cycles);

  InferenceResult result;
  result.scale = norm.scale;
  result.depth_sequence.reserve(run.depth_sequence.size());
  for (const auto& d : run.depth_sequence) {
    Tensor scaled = Tensor::zeros(d.shape());
    auto src = d.data();
    auto dst = scaled.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<real>(static_cast<double>(src[i]) * norm.scale);
    result.depth_sequence.push_back(std::move(scaled));
  }
  result.step_sources = std::move(run.step_sources);
  result.last_correlation = std::move(run.last_correlation);
  result.ranking = rank_correlations(result.last_correlation, RankingReduction::kAllSamples,
                                     model.config().neighborhood);
  return result;
}

RankingReport rank_sources(const InferenceResult& result, RankingReduction reduction, int neighborhood) {
  return rank_correlations(result.last_correlation, reduction, neighborhood);
}

PruneOutcome prune_and_eval(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                            const Tensor& gt_depth, int k, PruneMode mode, std::uint64_t seed, int cycles) {
  if (k < 1 || k > static_cast<int>(sources.size())) {
    throw std::invalid_argument("prune: k=" + std::to_string(k) + " outside [1, " + std::to_string(sources.size()) + "]");
  }
  const InferenceResult full = run_inference(model, reference, sources, cycles);
  return prune_and_eval(model, reference, sources, gt_depth, full.ranking, k, mode, seed, cycles);
}

PruneOutcome prune_and_eval(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                            const Tensor& gt_depth, const RankingReport& ranking, int k, PruneMode mode,
                            std::uint64_t seed, int cycles) {
  const std::size_t n = sources.size();
  if (k < 1 || k > static_cast<int>(n)) {
    throw std::invalid_argument("prune: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> chosen;
  if (mode == PruneMode::kRanked) {
    for (int i = 0; i < k; ++i) {
      const auto& id = ranking.ordering.at(static_cast<std::size_t>(i));
      for (std::size_t s = 0; s < n; ++s) {
        if (sources[s].id == id) chosen.push_back(s);
      }
    }
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates so the draw does not depend on std::shuffle internals.
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    chosen.assign(all.begin(), all.begin() + k);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<View> kept;
  PruneOutcome out;
  for (auto s : chosen) {
    kept.push_back(sources[s]);
    out.kept.push_back(sources[s].id);
  }
  const InferenceResult pruned = run_inference(model, reference, kept, cycles);
  out.metrics = compute_metrics(pruned.final_depth(), gt_depth, valid_depth_mask(gt_depth));
  return out;
}

BlurOutcome blur_experiment(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                            int top_k, double sigma, int cycles, RankingReduction reduction) {
  if (top_k < 1 || top_k > static_cast<int>(sources.size())) {
    throw std::invalid_argument("blur_experiment: top_k outside [1, N]");
  }
  BlurOutcome out;
  const int nb = model.config().neighborhood;
  out.before = rank_sources(run_inference(model, reference, sources, cycles), reduction, nb);
  std::vector<View> extended = sources;
  for (int i = 0; i < top_k; ++i) {
    const auto& id = out.before.ordering[static_cast<std::size_t>(i)];
    for (const auto& s : sources) {
      if (s.id != id) continue;
      View blurred = blur_view(s, sigma);
      blurred.id = s.id + "_blur";
      out.blurred.push_back(blurred.id);
      extended.push_back(std::move(blurred));
    }
  }
  out.after = rank_sources(run_inference(model, reference, extended, cycles), reduction, nb);
  for (std::size_t i = 0; i < out.blurred.size(); ++i) {
    const std::string sharp = out.blurred[i].substr(0, out.blurred[i].size() - 5);
    out.demoted.push_back(out.after.position_of(out.blurred[i]) > out.after.position_of(sharp));
  }
  return out;
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
