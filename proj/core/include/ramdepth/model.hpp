#pragma once

#include <cstdint>
#include <string>

#include "ramdepth/encoders.hpp"
#include "ramdepth/matcher.hpp"
#include "ramdepth/updater.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

struct ModelConfig {
  EncoderConfig encoder;
  int hidden_dim = 32;
  int neighborhood = 9;  // Z = neighborhood^2 sampling offsets
  std::uint64_t init_seed = 0;

  // Desk-scale defaults used by tests and the CLI.
  static ModelConfig toy();
  // Channel widths of the full-size network.
  static ModelConfig full_scale();

  void validate() const;
  std::int64_t samples() const { return static_cast<std::int64_t>(neighborhood) * neighborhood; }
};

// All learned components. Parameters live in one store so checkpointing and
// optimization see a single sorted set.
class RamDepthModel {
 public:
  explicit RamDepthModel(const ModelConfig& config);
  RamDepthModel(const RamDepthModel&) = delete;
  RamDepthModel& operator=(const RamDepthModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  const Encoder& feature_encoder() const { return feature_encoder_; }
  const Encoder& context_encoder() const { return context_encoder_; }
  const OffsetPredictor& offset_predictor() const { return offsets_; }
  const RecurrentBlock& recurrent_block() const { return recurrent_; }
  const UpmaskPredictor& upmask_predictor() const { return upmask_; }

 private:
  ModelConfig config_;
  ParameterStore params_;
  Encoder feature_encoder_;
  Encoder context_encoder_;
  OffsetPredictor offsets_;
  RecurrentBlock recurrent_;
  UpmaskPredictor upmask_;
};

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
