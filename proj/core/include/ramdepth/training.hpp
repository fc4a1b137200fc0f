#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ramdepth/metrics.hpp"
#include "ramdepth/model.hpp"
#include "ramdepth/synthdata.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

struct TrainConfig {
  double gamma = 0.8;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double clip_norm = 1.0;
  int cycles = 10;
  int steps = 2000;
  std::uint64_t seed = 0;
  double fine_tune_lr = 1e-5;
  int fine_tune_steps = 0;  // run after `steps` at fine_tune_lr
  int val_every = 0;        // 0 disables validation during training
  int checkpoint_every = 0; // 0 writes only the final checkpoint
  std::filesystem::path out_dir;  // empty: nothing is written

  // Desk-scale preset used by the acceptance run and `ramdepth train`.
  static TrainConfig toy();
  void validate() const;
};

// sum_s gamma^(S-s) * mean over valid pixels of |gt - preds[s]|.
Tensor sequence_loss(const std::vector<Tensor>& preds, const Tensor& gt, const Mask& valid, double gamma);

// Scales every gradient in `params` so the global L2 norm is at most
// max_norm. Returns the norm before clipping.
double clip_global_norm(ParameterStore& params, double max_norm);

// Adaptive moments with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParameterStore& params, double lr, double weight_decay);
  std::int64_t steps() const { return t_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, Moments> state_;
};

struct TrainLogEntry {
  int step = 0;
  double loss = 0;
  std::optional<double> mae_val;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
};

// Loss and gradients for one scene; leaves gradients in the model store.
double train_loss_and_grad(RamDepthModel& model, const Scene& scene, int cycles, double gamma);

// Mean last-iteration MAE (scene units) over `scenes`.
double validation_mae(const RamDepthModel& model, const std::vector<Scene>& scenes, int cycles);

// Batch size 1, one scene per step, epoch order shuffled from config.seed.
// On a non-finite loss or gradient the current (last good) parameters are
// written to out_dir/last_good.ckpt and NumericalError is thrown.
TrainResult train(const TrainConfig& config, RamDepthModel& model, const std::vector<Scene>& train_set,
                  const std::vector<Scene>& val_set = {});

void write_loss_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
