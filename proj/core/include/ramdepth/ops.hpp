#pragma once

#include <array>
#include <optional>
#include <vector>

#include "ramdepth/tensor.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

using IntPair = std::array<int, 2>;

// 2-D cross-correlation over NCHW input with OIKhKw weights.
Tensor conv2d(const Tensor& input, const Tensor& weight, const std::optional<Tensor>& bias,
              IntPair stride = {1, 1}, IntPair padding = {0, 0});

enum class ActivationKind { kRelu, kSigmoid, kTanh, kSoftmax };

Tensor activation(ActivationKind kind, const Tensor& x, std::optional<int> axis = std::nullopt);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor softmax(const Tensor& x, int axis);

enum class NormMode {
  kGroup,      // statistics per (sample, channel group)
  kBatchStat,  // statistics per channel over batch and space
};

inline constexpr real kNormEpsilon = real(1e-5);

Tensor norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
              NormMode mode = NormMode::kGroup, int groups = 8);

// Bilinear sampling of NCHW features at per-output (u, v) pixel coordinates
// given as N x 2 x Hs x Ws. (0, 0) is the centre of the top-left pixel.
// Locations outside [-0.5, W-0.5] x [-0.5, H-0.5] read zero, as do corner
// taps that fall off the grid.
Tensor grid_sample_bilinear(const Tensor& feat, const Tensor& coords);

struct GruWeights {
  Tensor update_weight, update_bias;  // z gate
  Tensor reset_weight, reset_bias;    // r gate
  Tensor cand_weight, cand_bias;      // candidate state
};

// One convolutional GRU step; padding keeps spatial size (kernel extents odd).
Tensor conv_gru(const Tensor& x, const Tensor& h, const GruWeights& weights, IntPair kernel);

// Elementwise and structural ops. Shapes must match exactly; there is no
// implicit broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor affine(const Tensor& x, real scale, real shift);  // scale * x + shift
Tensor abs(const Tensor& x);
Tensor clamp_min(const Tensor& x, real lo);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length);
Tensor reshape(const Tensor& x, Shape shape);
Tensor tile(const Tensor& x, int axis, std::int64_t times);  // repeat along an extent-1 axis
Tensor sum(const Tensor& x, int axis);                      // keeps the axis with extent 1
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
