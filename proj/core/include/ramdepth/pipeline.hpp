#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ramdepth/geometry.hpp"
#include "ramdepth/metrics.hpp"
#include "ramdepth/model.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

inline constexpr int kDefaultCycles = 10;

// Round-robin source index for 1-based refinement step `step`.
std::size_t schedule(int step, std::size_t n_sources);

struct RankingEntry {
  std::string source_id;
  double score = 0;
  std::size_t input_index = 0;
};

struct RankingReport {
  std::vector<RankingEntry> entries;  // input order
  std::vector<std::string> ordering;  // source ids, best first; ties keep input order

  double score_of(const std::string& id) const;
  std::size_t position_of(const std::string& id) const;
};

enum class RankingReduction {
  kAllSamples,    // mean over every offset channel and pixel
  kCenterSample,  // mean of the zero-offset channel only
};

RankingReport rank_correlations(const std::vector<CorrelationSample>& last_samples,
                                RankingReduction reduction = RankingReduction::kAllSamples,
                                int neighborhood = 9);

// Forward pass on views that are already pose-normalized (reference first).
// Depths are in normalized units and carry gradients when a tape is active.
struct NormalizedRun {
  std::vector<Tensor> depth_sequence;
  std::vector<std::string> step_sources;
  std::vector<CorrelationSample> last_correlation;  // per source, input order
  DepthState final_state;
};

NormalizedRun run_normalized(const RamDepthModel& model, const std::vector<View>& views, int cycles);

struct InferenceResult {
  std::vector<Tensor> depth_sequence;  // cycles * N full-resolution maps, scene units
  std::vector<std::string> step_sources;
  std::vector<CorrelationSample> last_correlation;
  RankingReport ranking;
  double scale = 1;  // pose normalization scale applied to outputs

  const Tensor& final_depth() const { return depth_sequence.back(); }
};

// Encodes every view once, then refines from zero depth for cycles * N
// steps, one source per step. There is no depth-range input.
InferenceResult run_inference(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                              int cycles = kDefaultCycles);

RankingReport rank_sources(const InferenceResult& result,
                           RankingReduction reduction = RankingReduction::kAllSamples, int neighborhood = 9);

enum class PruneMode { kRanked, kRandom };

struct PruneOutcome {
  Metrics metrics;
  std::vector<std::string> kept;  // source ids in input order
};

// Keeps k sources (best-ranked or uniformly sampled) and re-runs inference.
PruneOutcome prune_and_eval(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                            const Tensor& gt_depth, int k, PruneMode mode, std::uint64_t seed,
                            int cycles = kDefaultCycles);
// Same, reusing a ranking from an earlier full run over `sources`.
PruneOutcome prune_and_eval(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                            const Tensor& gt_depth, const RankingReport& ranking, int k, PruneMode mode,
                            std::uint64_t seed, int cycles = kDefaultCycles);

struct BlurOutcome {
  RankingReport before;
  RankingReport after;  // over sources plus blurred duplicates (ids suffixed "_blur")
  std::vector<std::string> blurred;
  std::vector<bool> demoted;  // per blurred view: ranks below its sharp original
};

// Ranks the sources, appends Gaussian-blurred copies of the top `top_k`,
// and re-ranks the extended set.
BlurOutcome blur_experiment(const RamDepthModel& model, const View& reference, const std::vector<View>& sources,
                            int top_k, double sigma, int cycles = kDefaultCycles,
                            RankingReduction reduction = RankingReduction::kAllSamples);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
