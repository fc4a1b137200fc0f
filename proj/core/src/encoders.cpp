#include "ramdepth/encoders.hpp"

#include <bit>
#include <cmath>

namespace ramdepth::inline RAMDEPTH_PRECISION {

void EncoderConfig::validate() const {
  if (downsample_factor < 2 || !std::has_single_bit(static_cast<unsigned>(downsample_factor))) {
    throw ShapeError("downsample factor must be a power of two >= 2, got " + std::to_string(downsample_factor));
  }
  if (base_channels <= 0 || feature_dim <= 0 || context_dim <= 0) {
    throw ShapeError("encoder channel counts must be positive");
  }
}

std::int64_t encoder_stage_width(int base_channels, int stage) {
  const double w = base_channels * (1.0 + 0.5 * stage);
  return std::max<std::int64_t>(8, static_cast<std::int64_t>(std::lround(w / 8.0)) * 8);
}

Encoder::Block Encoder::make_block(ParameterStore& store, const std::string& name, std::int64_t in,
                                   std::int64_t out, bool strided, Rng& rng) const {
  Block b;
  b.strided = strided;
  const IntPair stride = strided ? IntPair{2, 2} : IntPair{1, 1};
  b.conv0 = Conv2d(store, name + ".conv0", in, out, {3, 3}, rng, stride);
  b.norm0 = Norm2d(store, name + ".norm0", out, config_.norm_mode);
  b.conv1 = Conv2d(store, name + ".conv1", out, out, {3, 3}, rng);
  b.norm1 = Norm2d(store, name + ".norm1", out, config_.norm_mode);
  if (strided) {
    b.down = Conv2d(store, name + ".down", in, out, {1, 1}, rng, stride);
    b.norm_down = Norm2d(store, name + ".norm_down", out, config_.norm_mode);
  } else if (in != out) {
    throw ShapeError("stride-1 residual block needs equal in/out channels");
  }
  return b;
}

Encoder::Encoder(ParameterStore& store, const std::string& name, const EncoderConfig& config, int out_dim,
                 Rng& rng)
    : config_(config), out_dim_(out_dim) {
  config.validate();
  const std::int64_t stem_width = encoder_stage_width(config.base_channels, 0);
  stem_ = Conv2d(store, name + ".stem", 3, stem_width, {7, 7}, rng, {2, 2});
  stem_norm_ = Norm2d(store, name + ".stem_norm", stem_width, config.norm_mode);
  const int stages = std::countr_zero(static_cast<unsigned>(config.downsample_factor)) - 1;
  std::int64_t width = stem_width;
  for (int s = 0; s < stages; ++s) {
    const std::int64_t next = encoder_stage_width(config.base_channels, s);
    const std::string prefix = name + ".stage" + std::to_string(s);
    blocks_.push_back(make_block(store, prefix + ".a", width, next, true, rng));
    blocks_.push_back(make_block(store, prefix + ".b", next, next, false, rng));
    width = next;
  }
  if (stages == 0) blocks_.push_back(make_block(store, name + ".stage0.b", width, width, false, rng));
  // Keeps raw dot-product correlations of the projected features near unit scale.
  const real head_gain = static_cast<real>(std::pow(static_cast<double>(out_dim), -0.25));
  head_ = Conv2d(store, name + ".head", width, out_dim, {1, 1}, rng, {1, 1}, head_gain);
}

Tensor Encoder::run_block(const Block& b, const Tensor& x) const {
  Tensor y = relu(b.norm0(b.conv0(x)));
  y = relu(b.norm1(b.conv1(y)));
  const Tensor skip = b.strided ? relu(b.norm_down(b.down(x))) : x;
  return relu(add(y, skip));
}

Tensor Encoder::operator()(const Tensor& image) const {
  if (image.rank() != 4 || image.dim(1) != 3) {
    throw ShapeError("encoder expects a 1x3xHxW image, got " + shape_str(image.shape()));
  }
  const int f = config_.downsample_factor;
  if (image.dim(2) % f != 0 || image.dim(3) % f != 0) {
    throw ShapeError("image size " + std::to_string(image.dim(3)) + "x" + std::to_string(image.dim(2)) +
                     " is not divisible by the downsample factor " + std::to_string(f));
  }
  calls_->fetch_add(1);
  Tensor x = relu(stem_norm_(stem_(image)));
  for (const auto& b : blocks_) x = run_block(b, x);
  return head_(x);
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
