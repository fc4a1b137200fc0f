#include "ramdepth/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "ramdepth/checkpoint.hpp"
#include "ramdepth/pipeline.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.cycles = 4;
  c.steps = 2000;
  return c;
}

void TrainConfig::validate() const {
  if (!(gamma > 0) || gamma > 1) throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(lr >= 0) || !(fine_tune_lr >= 0)) throw std::invalid_argument("learning rates must be >= 0");
  if (weight_decay < 0) throw std::invalid_argument("weight decay must be >= 0");
  if (!(clip_norm > 0)) throw std::invalid_argument("clip norm must be > 0");
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  if (steps < 0 || fine_tune_steps < 0) throw std::invalid_argument("step counts must be >= 0");
  if (val_every < 0 || checkpoint_every < 0) throw std::invalid_argument("intervals must be >= 0");
}

Tensor sequence_loss(const std::vector<Tensor>& preds, const Tensor& gt, const Mask& valid, double gamma) {
  if (preds.empty()) throw std::invalid_argument("sequence_loss: empty prediction sequence");
  if (static_cast<std::int64_t>(valid.size()) != gt.numel()) throw ShapeError("sequence_loss: mask size mismatch");
  const auto count = std::count(valid.begin(), valid.end(), std::uint8_t{1});
  if (count == 0) throw std::invalid_argument("sequence_loss: no valid ground-truth pixels");
  const std::size_t steps = preds.size();
  std::vector<double> weights(steps);
  auto g = gt.data();
  double total = 0;
  for (std::size_t s = 0; s < steps; ++s) {
    if (preds[s].shape() != gt.shape()) {
      throw ShapeError("sequence_loss: prediction " + shape_str(preds[s].shape()) + " vs ground truth " +
                       shape_str(gt.shape()));
    }
    weights[s] = std::pow(gamma, static_cast<double>(steps - 1 - s)) / static_cast<double>(count);
    auto p = preds[s].data();
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (valid[i]) acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(g[i]));
    }
    total += weights[s] * acc;
  }
  Tensor loss = Tensor::scalar(static_cast<real>(total));
  if (needs_grad(std::span<const Tensor>(preds))) {
    record_op("sequence_loss", loss, preds, [preds, gt, valid, weights](std::span<const real> go) {
      auto g = gt.data();
      for (std::size_t s = 0; s < preds.size(); ++s) {
        auto buf = grad_buffer(preds[s]);
        if (buf.empty()) continue;
        auto p = preds[s].data();
        const double w = weights[s] * static_cast<double>(go[0]);
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (!valid[i] || p[i] == g[i]) continue;
          buf[i] += static_cast<real>(p[i] > g[i] ? w : -w);
        }
      }
    });
  }
  return loss;
}

double clip_global_norm(ParameterStore& params, double max_norm) {
  double sq = 0;
  for (const auto& [name, p] : params.all()) {
    if (!p.has_grad()) continue;
    for (real v : p.grad()) {
      if (!std::isfinite(v)) throw NumericalError("non-finite gradient in parameter '" + name + "'");
      sq += static_cast<double>(v) * static_cast<double>(v);
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (const auto& [name, p] : params.all()) {
      if (!p.has_grad()) continue;
      Tensor t = p;
      for (auto& v : t.mutable_grad()) v = static_cast<real>(static_cast<double>(v) * f);
    }
  }
  return norm;
}

void AdamW::step(ParameterStore& params, double lr, double weight_decay) {
  ++t_;
  const double c1 = 1 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, p] : params.all()) {
    Tensor t = p;
    auto values = t.mutable_data();
    auto& st = state_[name];
    if (st.m.size() != values.size()) {
      st.m.assign(values.size(), 0.0);
      st.v.assign(values.size(), 0.0);
    }
    const bool has_grad = t.has_grad();
    std::span<const real> grad = has_grad ? t.grad() : std::span<const real>();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has_grad ? static_cast<double>(grad[i]) : 0.0;
      st.m[i] = beta1_ * st.m[i] + (1 - beta1_) * g;
      st.v[i] = beta2_ * st.v[i] + (1 - beta2_) * g * g;
      const double mh = st.m[i] / c1, vh = st.v[i] / c2;
      const double theta = values[i];
      values[i] = static_cast<real>(theta - lr * (mh / (std::sqrt(vh) + eps_) + weight_decay * theta));
    }
  }
}

double train_loss_and_grad(RamDepthModel& model, const Scene& scene, int cycles, double gamma) {
  if (scene.depths.empty()) throw std::invalid_argument("scene '" + scene.name + "' has no ground-truth depth");
  const PoseNormalization norm = normalize_poses(scene.views);
  Tensor gt = scene.depths.front().clone();
  for (auto& d : gt.mutable_data()) d = static_cast<real>(static_cast<double>(d) / norm.scale);
  const Mask mask = valid_depth_mask(gt);

  model.parameters().zero_grad();
  Tape tape;
  double value = 0;
  {
    TapeScope scope(tape);
    NormalizedRun run = run_normalized(model, norm.views, cycles);
    Tensor loss = sequence_loss(run.depth_sequence, gt, mask, gamma);
    value = loss.item();
    if (!std::isfinite(value)) throw NumericalError("non-finite loss on scene '" + scene.name + "'");
    backward(loss, tape);
  }
  return value;
}

double validation_mae(const RamDepthModel& model, const std::vector<Scene>& scenes, int cycles) {
  if (scenes.empty()) throw std::invalid_argument("validation set is empty");
  double total = 0;
  for (const auto& s : scenes) {
    const std::vector<View> sources(s.views.begin() + 1, s.views.end());
    const InferenceResult r = run_inference(model, s.views.front(), sources, cycles);
    total += compute_metrics(r.final_depth(), s.depths.front(), valid_depth_mask(s.depths.front())).mae;
  }
  return total / static_cast<double>(scenes.size());
}

void write_loss_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,loss,mae_val\n" << std::setprecision(9);
  for (const auto& e : log) {
    out << e.step << ',' << e.loss << ',';
    if (e.mae_val) out << *e.mae_val;
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

TrainResult train(const TrainConfig& config, RamDepthModel& model, const std::vector<Scene>& train_set,
                  const std::vector<Scene>& val_set) {
  config.validate();
  const int total = config.steps + config.fine_tune_steps;
  if (total > 0 && train_set.empty()) throw std::invalid_argument("training set is empty");
  const bool writes = !config.out_dir.empty();
  if (writes) std::filesystem::create_directories(config.out_dir);

  TrainResult result;
  AdamW opt;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::size_t cursor = order.size();

  auto flush = [&] {
    if (!writes) return;
    write_loss_log(config.out_dir / "loss.csv", result.log);
    save_checkpoint(config.out_dir / "model.ckpt", model.parameters());
  };

  for (int step = 1; step <= total; ++step) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
      }
      cursor = 0;
    }
    const Scene& scene = train_set[order[cursor++]];
    double loss = 0;
    try {
      loss = train_loss_and_grad(model, scene, config.cycles, config.gamma);
      clip_global_norm(model.parameters(), config.clip_norm);
    } catch (const NumericalError& e) {
      if (writes) {
        save_checkpoint(config.out_dir / "last_good.ckpt", model.parameters());
        write_loss_log(config.out_dir / "loss.csv", result.log);
      }
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(step));
    }
    const double lr = step <= config.steps ? config.lr : config.fine_tune_lr;
    opt.step(model.parameters(), lr, config.weight_decay);

    TrainLogEntry entry{step, loss, std::nullopt};
    if (config.val_every > 0 && !val_set.empty() && (step % config.val_every == 0 || step == total)) {
      entry.mae_val = validation_mae(model, val_set, config.cycles);
    }
    result.log.push_back(entry);
    if (writes && config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      save_checkpoint(config.out_dir / ("step_" + std::to_string(step) + ".ckpt"), model.parameters());
    }
  }
  model.parameters().zero_grad();
  flush();
  return result;
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
