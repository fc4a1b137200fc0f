#include "ramdepth/updater.hpp"

#include <algorithm>

namespace ramdepth::inline RAMDEPTH_PRECISION {

DepthState DepthState::initial(std::int64_t height, std::int64_t width, std::int64_t hidden_dim) {
  return {Tensor::zeros({1, 1, height, width}), Tensor::zeros({1, hidden_dim, height, width}), 0};
}

RecurrentBlock::RecurrentBlock(ParameterStore& store, const std::string& name, std::int64_t samples,
                               std::int64_t context_dim, std::int64_t hidden_dim, Rng& rng) {
  if (hidden_dim < 4 || hidden_dim % 2 != 0) throw ShapeError("hidden_dim must be even and >= 4");
  const std::int64_t corr_width = 2 * hidden_dim;
  const std::int64_t corr_out = hidden_dim + hidden_dim / 2;
  const std::int64_t dfeat_width = hidden_dim;
  const std::int64_t dfeat_out = hidden_dim / 2;
  corr0_ = Conv2d(store, name + ".corr0", samples, corr_width, {1, 1}, rng);
  corr1_ = Conv2d(store, name + ".corr1", corr_width, corr_out, {3, 3}, rng);
  dfeat0_ = Conv2d(store, name + ".dfeat0", 1, dfeat_width, {7, 7}, rng);
  dfeat1_ = Conv2d(store, name + ".dfeat1", dfeat_width, dfeat_out, {3, 3}, rng);
  motion_ = Conv2d(store, name + ".motion", corr_out + dfeat_out, hidden_dim - 1, {3, 3}, rng);
  const std::int64_t gru_input = context_dim + hidden_dim;  // context, motion features, depth
  gru_horizontal_ = ConvGru(store, name + ".gru_h", gru_input, hidden_dim, {1, 5}, rng);
  gru_vertical_ = ConvGru(store, name + ".gru_v", gru_input, hidden_dim, {5, 1}, rng);
  delta0_ = Conv2d(store, name + ".delta0", hidden_dim, hidden_dim / 2, {3, 3}, rng);
  delta1_ = Conv2d(store, name + ".delta1", hidden_dim / 2, 1, {3, 3}, rng, {1, 1}, real(0.1));
}

Tensor RecurrentBlock::delta_depth(const Tensor& hidden) const { return delta1_(relu(delta0_(hidden))); }

DepthState RecurrentBlock::operator()(const Tensor& correlation, const Tensor& context,
                                      const DepthState& state) const {
  const Tensor c = relu(corr1_(relu(corr0_(correlation))));
  const Tensor d = relu(dfeat1_(relu(dfeat0_(state.depth))));
  const Tensor motion = concat({relu(motion_(concat({c, d}, 1))), state.depth}, 1);
  const Tensor x = concat({context, motion}, 1);
  Tensor h = gru_horizontal_(x, state.hidden);
  h = gru_vertical_(x, h);
  return {add(state.depth, delta_depth(h)), h, state.step + 1};
}

UpmaskPredictor::UpmaskPredictor(ParameterStore& store, const std::string& name, std::int64_t hidden_dim,
                                 std::int64_t context_dim, int factor, Rng& rng)
    : factor_(factor) {
  const std::int64_t width = hidden_dim + context_dim;
  conv0_ = Conv2d(store, name + ".conv0", width, width, {3, 3}, rng);
  head_ = Conv2d(store, name + ".head", width, static_cast<std::int64_t>(kUpsampleNeighbors) * factor * factor,
                 {1, 1}, rng, {1, 1}, real(0.1));
}

UpsampleMask UpmaskPredictor::operator()(const Tensor& hidden, const Tensor& context) const {
  const Tensor logits = head_(relu(conv0_(concat({hidden, context}, 1))));
  return normalize_upmask(logits, factor_);
}

UpsampleMask normalize_upmask(const Tensor& logits, int factor) {
  const std::int64_t sub = static_cast<std::int64_t>(factor) * factor;
  if (logits.rank() != 4 || logits.dim(1) != kUpsampleNeighbors * sub) {
    throw ShapeError("upsample logits " + shape_str(logits.shape()) + " do not match factor " +
                     std::to_string(factor));
  }
  const std::int64_t h = logits.dim(2), w = logits.dim(3);
  const Tensor grouped = reshape(logits, {1, kUpsampleNeighbors, sub, h * w});
  return {reshape(softmax(grouped, 1), {1, kUpsampleNeighbors * sub, h, w}), factor};
}

Tensor convex_upsample(const Tensor& depth, const UpsampleMask& mask) {
  if (depth.rank() != 4 || depth.dim(0) != 1 || depth.dim(1) != 1) {
    throw ShapeError("convex_upsample: depth must be 1x1xHxW, got " + shape_str(depth.shape()));
  }
  const std::int64_t f = mask.factor;
  const std::int64_t h = depth.dim(2), w = depth.dim(3);
  if (mask.weights.shape() != Shape{1, kUpsampleNeighbors * f * f, h, w}) {
    throw ShapeError("convex_upsample: mask " + shape_str(mask.weights.shape()) + " does not match factor " +
                     std::to_string(f) + " and depth " + shape_str(depth.shape()));
  }
  const std::int64_t out_w = w * f, plane = h * w, sub = f * f;
  // Neighbour k of coarse pixel p, with edge replication.
  auto neighbor = [h, w](std::int64_t y, std::int64_t x, int k) {
    const std::int64_t ny = std::clamp<std::int64_t>(y + k / 3 - 1, 0, h - 1);
    const std::int64_t nx = std::clamp<std::int64_t>(x + k % 3 - 1, 0, w - 1);
    return ny * w + nx;
  };
  // Evaluated as sum_k w_k d_k / sum_k w_k in double. Float products are exact
  // there, so constant neighbourhoods come back unchanged. The clamp only
  // absorbs the last rounding step.
  auto dd = depth.data();
  auto md = mask.weights.data();
  std::vector<real> out(static_cast<std::size_t>(plane * sub), real(0));
  std::vector<double> num(static_cast<std::size_t>(sub)), den(static_cast<std::size_t>(sub));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t p = y * w + x;
      double lo = dd[static_cast<std::size_t>(p)], hi = lo;
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);
      for (int k = 0; k < kUpsampleNeighbors; ++k) {
        const double dv = dd[static_cast<std::size_t>(neighbor(y, x, k))];
        lo = std::min(lo, dv);
        hi = std::max(hi, dv);
        const real* mk = md.data() + static_cast<std::int64_t>(k) * sub * plane + p;
        for (std::int64_t s = 0; s < sub; ++s) {
          const double wk = mk[s * plane];
          num[static_cast<std::size_t>(s)] += wk * dv;
          den[static_cast<std::size_t>(s)] += wk;
        }
      }
      for (std::int64_t sy = 0; sy < f; ++sy) {
        real* row = out.data() + (y * f + sy) * out_w + x * f;
        for (std::int64_t sx = 0; sx < f; ++sx) {
          const auto s = static_cast<std::size_t>(sy * f + sx);
          if (!(den[s] > 0)) throw NumericalError("convex_upsample: mask weights must have a positive sum");
          row[sx] = static_cast<real>(std::clamp(num[s] / den[s], lo, hi));
        }
      }
    }
  }
  Tensor result = Tensor::from_data({1, 1, h * f, out_w}, std::move(out));
  if (needs_grad({&depth, &mask.weights})) {
    const Tensor weights = mask.weights;
    record_op("convex_upsample", result, {depth, weights},
              [depth, weights, neighbor, h, w, f, sub, plane, out_w](std::span<const real> g) {
                auto gd = grad_buffer(depth);
                auto gm = grad_buffer(weights);
                auto dd = depth.data();
                auto md = weights.data();
                std::int64_t nb[kUpsampleNeighbors];
                for (std::int64_t y = 0; y < h; ++y) {
                  for (std::int64_t x = 0; x < w; ++x) {
                    const std::int64_t p = y * w + x;
                    for (int k = 0; k < kUpsampleNeighbors; ++k) nb[k] = neighbor(y, x, k);
                    for (std::int64_t s = 0; s < sub; ++s) {
                      const double go = g[static_cast<std::size_t>((y * f + s / f) * out_w + x * f + s % f)];
                      double num = 0, den = 0;
                      for (int k = 0; k < kUpsampleNeighbors; ++k) {
                        const double wk = md[static_cast<std::size_t>(k * sub * plane + s * plane + p)];
                        num += wk * dd[static_cast<std::size_t>(nb[k])];
                        den += wk;
                      }
                      const double v = num / den;
                      for (int k = 0; k < kUpsampleNeighbors; ++k) {
                        const auto mi = static_cast<std::size_t>(k * sub * plane + s * plane + p);
                        if (!gd.empty()) gd[static_cast<std::size_t>(nb[k])] += static_cast<real>(go * md[mi] / den);
                        if (!gm.empty()) {
                          gm[mi] += static_cast<real>(go * (dd[static_cast<std::size_t>(nb[k])] - v) / den);
                        }
                      }
                    }
                  }
                }
              });
  }
  return result;
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
