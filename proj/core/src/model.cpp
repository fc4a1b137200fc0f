#include "ramdepth/model.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.encoder.base_channels = 64;
  c.encoder.feature_dim = 256;
  c.encoder.context_dim = 128;
  c.hidden_dim = 128;
  return c;
}

void ModelConfig::validate() const {
  encoder.validate();
  if (hidden_dim < 4 || hidden_dim % 2 != 0) throw ShapeError("hidden_dim must be even and >= 4");
  if (neighborhood < 1) throw ShapeError("neighborhood must be >= 1");
}

RamDepthModel::RamDepthModel(const ModelConfig& config) : config_(config) {
  config.validate();
  Rng rng(config.init_seed);
  feature_encoder_ = Encoder(params_, "fnet", config.encoder, config.encoder.feature_dim, rng);
  context_encoder_ = Encoder(params_, "cnet", config.encoder, config.encoder.context_dim, rng);
  offsets_ = OffsetPredictor(params_, "offsets", config.encoder.context_dim, config.hidden_dim,
                             config.neighborhood, config.encoder.norm_mode, rng);
  recurrent_ = RecurrentBlock(params_, "update", config.samples(), config.encoder.context_dim, config.hidden_dim, rng);
  upmask_ = UpmaskPredictor(params_, "upmask", config.hidden_dim, config.encoder.context_dim,
                            config.encoder.downsample_factor, rng);
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
