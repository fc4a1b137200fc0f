#pragma once

#include <string>

#include "ramdepth/geometry.hpp"
#include "ramdepth/nn.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

// Per-pixel sampling offsets in coarse-pixel units, 1 x 2Z x Hc x Wc.
// Channels [0, Z) hold du for samples z = 0..Z-1, channels [Z, 2Z) hold dv.
struct OffsetField {
  Tensor offsets;

  std::int64_t samples() const { return offsets.dim(1) / 2; }
};

struct CorrelationSample {
  Tensor scores;  // 1 x Z x Hc x Wc
  std::string source_id;
  int iteration = 0;
};

// Predicts the Z sampling offsets from reference context, hidden state and
// current depth: conv3x3 + norm + relu, then a 1x1 head to 2Z channels.
class OffsetPredictor {
 public:
  OffsetPredictor() = default;
  OffsetPredictor(ParameterStore& store, const std::string& name, std::int64_t context_dim,
                  std::int64_t hidden_dim, int neighborhood, NormMode norm_mode, Rng& rng);

  OffsetField operator()(const Tensor& context, const Tensor& hidden, const Tensor& depth) const;

  int neighborhood() const { return neighborhood_; }

 private:
  int neighborhood_ = 9;
  Conv2d conv0_;
  Norm2d norm0_;
  Conv2d head_;
};

// Regular neighborhood x neighborhood grid of (du, dv) pairs centred on zero,
// laid out like OffsetField channels; used to initialise the offset head bias.
std::vector<real> regular_offset_grid(int neighborhood, real spacing);

// Index of the zero-offset sample in the regular grid layout.
inline std::int64_t center_sample_index(int neighborhood) { return (neighborhood * neighborhood) / 2; }

// Raw dot-product correlation between reference features and source
// features sampled at the epipolar projection of `depth` plus each offset.
// Returns 1 x Z x Hc x Wc.
Tensor sample_correlation(const Tensor& ref_feat, const Tensor& src_feat, const Tensor& depth,
                          const Camera& ref, const Camera& src, double scale, const OffsetField& offsets);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
