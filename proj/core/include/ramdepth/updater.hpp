#pragma once

#include <string>

#include "ramdepth/nn.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

struct DepthState {
  Tensor depth;   // 1 x 1 x Hc x Wc, normalized scene units
  Tensor hidden;  // 1 x Ch x Hc x Wc, entries in (-1, 1)
  int step = 0;

  // Zero depth and zero hidden state at coarse resolution.
  static DepthState initial(std::int64_t height, std::int64_t width, std::int64_t hidden_dim);
};

// Recurrent block: motion encoder over correlation scores and depth, two
// separable ConvGRU cells (1x5 then 5x1), and a two-layer depth-update head.
class RecurrentBlock {
 public:
  RecurrentBlock() = default;
  RecurrentBlock(ParameterStore& store, const std::string& name, std::int64_t samples, std::int64_t context_dim,
                 std::int64_t hidden_dim, Rng& rng);

  DepthState operator()(const Tensor& correlation, const Tensor& context, const DepthState& state) const;

  // Depth update alone (exposed for tests of the update head).
  Tensor delta_depth(const Tensor& hidden) const;

 private:
  Conv2d corr0_, corr1_, dfeat0_, dfeat1_, motion_;
  ConvGru gru_horizontal_, gru_vertical_;
  Conv2d delta0_, delta1_;
};

inline constexpr int kUpsampleNeighbors = 9;

// Convex-combination weights, 1 x (9 * f * f) x Hc x Wc. Channel
// k * f * f + sy * f + sx holds the weight of coarse neighbour k (3x3,
// row-major) for sub-pixel (sy, sx); the 9 weights of every sub-pixel are
// softmax-normalized.
struct UpsampleMask {
  Tensor weights;
  int factor = 8;
};

class UpmaskPredictor {
 public:
  UpmaskPredictor() = default;
  UpmaskPredictor(ParameterStore& store, const std::string& name, std::int64_t hidden_dim,
                  std::int64_t context_dim, int factor, Rng& rng);

  UpsampleMask operator()(const Tensor& hidden, const Tensor& context) const;

 private:
  Conv2d conv0_, head_;
  int factor_ = 8;
};

// Softmax over the neighbour axis of raw 1 x (9 f^2) x Hc x Wc logits.
UpsampleMask normalize_upmask(const Tensor& logits, int factor);

// Full-resolution depth as per-sub-pixel convex combinations of the 3x3
// coarse neighbourhood (edge-replicated at borders).
Tensor convex_upsample(const Tensor& depth, const UpsampleMask& mask);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
