#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "ramdepth/nn.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

struct EncoderConfig {
  int downsample_factor = 8;
  int base_channels = 32;
  int feature_dim = 64;
  int context_dim = 64;
  NormMode norm_mode = NormMode::kGroup;

  void validate() const;
};

struct FeatureMaps {
  std::vector<Tensor> matching;  // one 1 x F x H/f x W/f map per view, reference first
  Tensor context;                // 1 x C x H/f x W/f, reference only
};

// Residual convolutional encoder: 7x7 stride-2 stem, log2(factor) - 1
// pairs of (stride-2, stride-1) residual blocks, 1x1 projection head.
class Encoder {
 public:
  Encoder() = default;
  Encoder(ParameterStore& store, const std::string& name, const EncoderConfig& config, int out_dim, Rng& rng);

  // image: 1 x 3 x H x W in [0, 1]; H and W divisible by the downsample factor.
  Tensor operator()(const Tensor& image) const;

  std::size_t invocations() const { return calls_->load(); }
  void reset_invocations() const { calls_->store(0); }
  int out_dim() const { return out_dim_; }

 private:
  struct Block {
    Conv2d conv0, conv1, down;
    Norm2d norm0, norm1, norm_down;
    bool strided = false;
  };
  Block make_block(ParameterStore& store, const std::string& name, std::int64_t in, std::int64_t out,
                   bool strided, Rng& rng) const;
  Tensor run_block(const Block& b, const Tensor& x) const;

  EncoderConfig config_;
  int out_dim_ = 0;
  Conv2d stem_;
  Norm2d stem_norm_;
  std::vector<Block> blocks_;
  Conv2d head_;
  std::shared_ptr<std::atomic<std::size_t>> calls_ = std::make_shared<std::atomic<std::size_t>>(0);
};

// Channel width of residual stage `stage` (0-based): base * (1 + stage / 2), rounded to 8.
std::int64_t encoder_stage_width(int base_channels, int stage);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
