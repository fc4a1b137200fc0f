#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>

#include "ramdepth/checkpoint.hpp"
#include "ramdepth/image_io.hpp"
#include "ramdepth/parallel.hpp"
#include "ramdepth/pipeline.hpp"
#include "ramdepth/synthdata.hpp"
#include "ramdepth/training.hpp"

namespace ramdepth::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelOptions {
  int base_channels = EncoderConfig{}.base_channels;
  int feature_dim = EncoderConfig{}.feature_dim;
  int context_dim = EncoderConfig{}.context_dim;
  int hidden_dim = ModelConfig{}.hidden_dim;
  std::string norm = "group";
  std::uint64_t init_seed = 0;

  ModelConfig to_config() const {
    ModelConfig c = ModelConfig::toy();
    c.encoder.base_channels = base_channels;
    c.encoder.feature_dim = feature_dim;
    c.encoder.context_dim = context_dim;
    c.encoder.norm_mode = norm == "batch" ? NormMode::kBatchStat : NormMode::kGroup;
    c.hidden_dim = hidden_dim;
    c.init_seed = init_seed;
    return c;
  }
};

struct GenOptions {
  fs::path out;
  int scenes = 100;
  std::uint64_t seed = 0;
  std::string size = "96x64";
  int views = 4;
  bool untextured = false;
  bool force = false;
};

struct TrainOptions {
  fs::path data, out, val_data;
  TrainConfig train = TrainConfig::toy();
  ModelOptions model;
};

struct EvalOptions {
  fs::path data, ckpt, report;
  int cycles = kDefaultCycles;
  bool oracle_gt = false;
};

struct RankOptions {
  fs::path data, ckpt, report;
  int cycles = kDefaultCycles;
  int blur_top = 0;
  double sigma = 3.0;
  std::string reduction = "all";
};

struct InferOptions {
  fs::path scene, ckpt, out;
  int cycles = kDefaultCycles;
  bool dump_sequence = false;
};

struct PruneOptions {
  fs::path data, ckpt, report;
  std::string mode = "ranked";
  int k = 0;  // 0: every k from N down to 1
  std::uint64_t seed = 0;
  int cycles = kDefaultCycles;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Writes every option of `cmd` as `key = value`, so the file can be fed
// back through --config to repeat the run.
void write_resolved_config(const CLI::App& cmd, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# ramdepth " << cmd.get_name() << "\n";
  for (const CLI::Option* opt : cmd.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "force") continue;
    std::string value;
    if (opt->get_type_size() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      for (const auto& r : opt->reduced_results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    if (value.empty()) continue;
    out << name << " = " << value << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

// Real-valued flags go through from_chars so a value read back from a
// resolved config reproduces the original double exactly.
CLI::Option* add_real(CLI::App* app, const std::string& name, double& target, const std::string& desc) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), target);
  return app
      ->add_option_function<std::string>(
          name,
          [&target, name](const std::string& text) {
            double v = 0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size()) {
              throw CLI::ValidationError(name, "not a number: " + text);
            }
            target = v;
          },
          desc)
      ->default_str(std::string(buf, res.ptr));
}

bool non_empty_dir(const fs::path& p) { return fs::is_directory(p) && !fs::is_empty(p); }

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

std::unique_ptr<RamDepthModel> load_model(const fs::path& ckpt) {
  require_file(ckpt, "checkpoint");
  auto model = std::make_unique<RamDepthModel>(model_config_for_checkpoint(ckpt));
  load_checkpoint(ckpt, model->parameters());
  return model;
}

std::vector<View> sources_of(const Scene& s) { return {s.views.begin() + 1, s.views.end()}; }

const Tensor& reference_gt(const Scene& s) {
  if (s.depths.empty()) throw IoError("scene '" + s.name + "' has no ground-truth depth");
  return s.depths.front();
}

void write_metrics_columns(std::ostream& out, const Metrics& m) {
  out << m.mae << ',' << m.rmse;
  for (const auto& [tau, frac] : m.threshold_fractions) out << ',' << frac;
}

std::string metrics_header() {
  std::ostringstream h;
  h << "mae,rmse";
  for (double tau : default_thresholds()) h << ",above_" << tau;
  return h.str();
}

std::ofstream open_report(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(9);
  return out;
}

fs::path sidecar_config(const fs::path& report) { return fs::path(report.string() + ".config.txt"); }

int cmd_gen(const CLI::App& cmd, const GenOptions& o, std::ostream& out) {
  static const std::regex size_re(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(o.size, m, size_re)) throw UsageError("--size must look like WxH, got '" + o.size + "'");
  SceneSpec spec;
  spec.width = std::stoi(m[1]);
  spec.height = std::stoi(m[2]);
  const int factor = EncoderConfig{}.downsample_factor;
  if (spec.width % factor != 0 || spec.height % factor != 0) {
    throw UsageError("--size " + o.size + " is not divisible by " + std::to_string(factor));
  }
  if (o.scenes < 1) throw UsageError("--scenes must be >= 1");
  if (o.views < 2) throw UsageError("--views must be >= 2");
  if (non_empty_dir(o.out) && !o.force) {
    throw UsageError(o.out.string() + " exists and is not empty (use --force)");
  }
  spec.n_views = o.views;
  spec.untextured = o.untextured;
  std::vector<Scene> scenes(static_cast<std::size_t>(o.scenes));
  parallel_for(scenes.size(), [&](std::size_t i) {
    SceneSpec s = spec;
    s.seed = o.seed + i;
    scenes[i] = generate_scene(s);
  });
  save_dataset(o.out, scenes);
  write_resolved_config(cmd, o.out / "config.txt");
  out << "wrote " << scenes.size() << " scenes to " << o.out.string() << "\n";
  return kExitOk;
}

int cmd_train(const CLI::App& cmd, TrainOptions o, std::ostream& out) {
  const auto train_set = load_dataset(o.data);
  std::vector<Scene> val_set;
  if (!o.val_data.empty()) val_set = load_dataset(o.val_data);
  RamDepthModel model(o.model.to_config());
  fs::create_directories(o.out);
  write_resolved_config(cmd, o.out / "config.txt");
  o.train.out_dir = o.out;
  const TrainResult r = train(o.train, model, train_set, val_set);
  out << "trained " << r.log.size() << " steps";
  if (!r.log.empty()) out << ", last loss " << r.log.back().loss;
  out << "\n";
  return kExitOk;
}

int cmd_eval(const CLI::App& cmd, const EvalOptions& o, std::ostream& out) {
  if (!o.oracle_gt && o.ckpt.empty()) throw UsageError("--ckpt is required unless --oracle-gt is given");
  std::unique_ptr<RamDepthModel> model;
  if (!o.oracle_gt) model = load_model(o.ckpt);
  const auto scenes = load_dataset(o.data);
  std::vector<Metrics> rows(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    const Scene& s = scenes[i];
    const Tensor& gt = reference_gt(s);
    if (o.oracle_gt) {
      rows[i] = compute_metrics(gt, gt, valid_depth_mask(gt));
    } else {
      const InferenceResult r = run_inference(*model, s.views.front(), sources_of(s), o.cycles);
      rows[i] = compute_metrics(r.final_depth(), gt, valid_depth_mask(gt));
    }
  });
  auto report = open_report(o.report);
  report << "scene," << metrics_header() << "\n";
  double mae = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    report << scenes[i].name << ',';
    write_metrics_columns(report, rows[i]);
    report << "\n";
    mae += rows[i].mae;
  }
  write_resolved_config(cmd, sidecar_config(o.report));
  out << "evaluated " << scenes.size() << " scenes, mean MAE " << mae / static_cast<double>(scenes.size()) << "\n";
  return kExitOk;
}

void write_ranking_rows(std::ostream& report, const std::string& scene, const RankingReport& r) {
  for (std::size_t pos = 0; pos < r.ordering.size(); ++pos) {
    const double score = r.score_of(r.ordering[pos]);
    bool tied = false;
    for (const auto& e : r.entries) {
      if (e.source_id != r.ordering[pos] && std::abs(e.score - score) <= 1e-6 * std::max(1.0, std::abs(score))) {
        tied = true;
      }
    }
    report << scene << ',' << pos << ',' << r.ordering[pos] << ',' << score << ',' << (tied ? 1 : 0) << "\n";
  }
}

int cmd_rank(const CLI::App& cmd, const RankOptions& o, std::ostream& out) {
  const auto model = load_model(o.ckpt);
  const auto scenes = load_dataset(o.data);
  const RankingReduction reduction =
      o.reduction == "center" ? RankingReduction::kCenterSample : RankingReduction::kAllSamples;
  const int nb = model->config().neighborhood;
  std::vector<RankingReport> reports(scenes.size());
  std::vector<BlurOutcome> blurs(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    const Scene& s = scenes[i];
    if (o.blur_top > 0) {
      blurs[i] = blur_experiment(*model, s.views.front(), sources_of(s), o.blur_top, o.sigma, o.cycles, reduction);
      reports[i] = blurs[i].after;
    } else {
      const InferenceResult r = run_inference(*model, s.views.front(), sources_of(s), o.cycles);
      reports[i] = rank_sources(r, reduction, nb);
    }
  });
  auto report = open_report(o.report);
  report << "scene,rank,source,score,tied\n";
  for (std::size_t i = 0; i < scenes.size(); ++i) write_ranking_rows(report, scenes[i].name, reports[i]);
  if (o.blur_top > 0) {
    auto blur_report = open_report(fs::path(o.report.string() + ".blur.csv"));
    blur_report << "scene,blurred,demoted\n";
    std::size_t all_demoted = 0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      bool every = true;
      for (std::size_t b = 0; b < blurs[i].blurred.size(); ++b) {
        blur_report << scenes[i].name << ',' << blurs[i].blurred[b] << ',' << (blurs[i].demoted[b] ? 1 : 0) << "\n";
        every = every && blurs[i].demoted[b];
      }
      all_demoted += every ? 1 : 0;
    }
    out << "blurred views demoted in " << all_demoted << "/" << scenes.size() << " scenes\n";
  }
  write_resolved_config(cmd, sidecar_config(o.report));
  out << "ranked sources for " << scenes.size() << " scenes\n";
  return kExitOk;
}

int cmd_infer(const CLI::App& cmd, const InferOptions& o, std::ostream& out) {
  const auto model = load_model(o.ckpt);
  const Scene scene = load_scene(o.scene);
  const InferenceResult r = run_inference(*model, scene.views.front(), sources_of(scene), o.cycles);
  fs::create_directories(o.out);
  write_pfm(o.out / "depth.pfm", r.final_depth());
  write_ply(o.out / "cloud.ply", backproject(r.final_depth(), scene.views.front()));
  if (o.dump_sequence) {
    fs::create_directories(o.out / "sequence");
    for (std::size_t s = 0; s < r.depth_sequence.size(); ++s) {
      std::ostringstream name;
      name << "depth_" << std::setw(3) << std::setfill('0') << s + 1 << ".pfm";
      write_pfm(o.out / "sequence" / name.str(), r.depth_sequence[s]);
    }
  }
  auto ranking = open_report(o.out / "ranking.csv");
  ranking << "scene,rank,source,score,tied\n";
  write_ranking_rows(ranking, scene.name, r.ranking);
  write_resolved_config(cmd, o.out / "config.txt");
  out << "wrote " << r.depth_sequence.size() << "-step inference to " << o.out.string() << "\n";
  return kExitOk;
}

int cmd_prune(const CLI::App& cmd, const PruneOptions& o, std::ostream& out) {
  const auto model = load_model(o.ckpt);
  const auto scenes = load_dataset(o.data);
  const PruneMode mode = o.mode == "random" ? PruneMode::kRandom : PruneMode::kRanked;
  std::size_t n = 0;
  for (const auto& s : scenes) n = std::max(n, s.views.size() - 1);
  std::vector<int> ks;
  if (o.k > 0) {
    ks.push_back(o.k);
  } else {
    for (int k = static_cast<int>(n); k >= 1; --k) ks.push_back(k);
  }
  std::vector<std::vector<Metrics>> rows(scenes.size(), std::vector<Metrics>(ks.size()));
  parallel_for(scenes.size(), [&](std::size_t i) {
    const Scene& s = scenes[i];
    const auto sources = sources_of(s);
    const RankingReport ranking = run_inference(*model, s.views.front(), sources, o.cycles).ranking;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (ks[j] > static_cast<int>(sources.size())) throw UsageError("--k exceeds the source count of " + s.name);
      rows[i][j] = prune_and_eval(*model, s.views.front(), sources, reference_gt(s), ranking, ks[j], mode,
                                  o.seed + i, o.cycles)
                       .metrics;
    }
  });
  auto report = open_report(o.report);
  report << "scene,mode,k," << metrics_header() << "\n";
  for (std::size_t j = 0; j < ks.size(); ++j) {
    Metrics mean;
    for (double tau : default_thresholds()) mean.threshold_fractions.emplace_back(tau, 0.0);
    const double inv = 1.0 / static_cast<double>(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const Metrics& m = rows[i][j];
      report << scenes[i].name << ',' << o.mode << ',' << ks[j] << ',';
      write_metrics_columns(report, m);
      report << "\n";
      mean.mae += m.mae * inv;
      mean.rmse += m.rmse * inv;
      for (std::size_t t = 0; t < mean.threshold_fractions.size(); ++t) {
        mean.threshold_fractions[t].second += m.threshold_fractions[t].second * inv;
      }
    }
    report << "mean," << o.mode << ',' << ks[j] << ',';
    write_metrics_columns(report, mean);
    report << "\n";
  }
  write_resolved_config(cmd, sidecar_config(o.report));
  out << "pruning curve over " << ks.size() << " values of k written to " << o.report.string() << "\n";
  return kExitOk;
}

// Replaces `--config FILE` with the file's `key = value` pairs as flags.
// Flags given on the command line take precedence; unknown keys surface as
// unexpected arguments at parse time.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (it + 1 == args.end()) throw UsageError("--config needs a file argument");
  const fs::path file = *(it + 1);
  std::vector<std::string> result(args.begin(), it);
  result.insert(result.end(), it + 2, args.end());
  auto given = [&](const std::string& flag) {
    return std::any_of(result.begin(), result.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  for (const auto& [key, value] : read_key_values(file)) {
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    if (value == "true") {
      result.push_back(flag);
    } else if (value != "false") {
      result.push_back(flag);
      result.push_back(value);
    }
  }
  return result;
}

}  // namespace

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

ModelConfig model_config_for_checkpoint(const fs::path& ckpt) {
  ModelConfig c = ModelConfig::toy();
  const fs::path cfg = ckpt.parent_path() / "config.txt";
  if (!fs::is_regular_file(cfg)) return c;
  const auto kv = read_key_values(cfg);
  auto get_int = [&](const char* key, int& field) {
    if (auto it = kv.find(key); it != kv.end()) field = std::stoi(it->second);
  };
  get_int("base-channels", c.encoder.base_channels);
  get_int("feature-dim", c.encoder.feature_dim);
  get_int("context-dim", c.encoder.context_dim);
  get_int("hidden-dim", c.hidden_dim);
  if (auto it = kv.find("norm"); it != kv.end() && it->second == "batch") c.encoder.norm_mode = NormMode::kBatchStat;
  if (auto it = kv.find("init-seed"); it != kv.end()) c.init_seed = std::stoull(it->second);
  return c;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Range-agnostic iterative multi-view depth estimation"};
  app.name("ramdepth");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::string config_file;  // expanded before parsing, see expand_config()

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic multi-view dataset");
  g->add_option("--config", config_file, "key = value file with option defaults");
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--scenes", gen.scenes, "Number of scenes");
  g->add_option("--seed", gen.seed, "Seed of the first scene");
  g->add_option("--size", gen.size, "Image size WxH");
  g->add_option("--views", gen.views, "Views per scene (reference plus sources)");
  g->add_flag("--untextured", gen.untextured, "Flat-coloured primitives");
  g->add_flag("--force", gen.force, "Write into a non-empty directory");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a model on a generated dataset");
  t->add_option("--config", config_file, "key = value file with option defaults");
  t->add_option("--data", tr.data, "Training dataset directory")->required();
  t->add_option("--out", tr.out, "Output directory for checkpoints and loss log")->required();
  t->add_option("--val-data", tr.val_data, "Validation dataset directory");
  t->add_option("--steps", tr.train.steps, "Optimizer steps");
  t->add_option("--seed", tr.train.seed, "Sample-order seed");
  add_real(t, "--lr", tr.train.lr, "Learning rate");
  add_real(t, "--weight-decay", tr.train.weight_decay, "Decoupled weight decay");
  add_real(t, "--clip-norm", tr.train.clip_norm, "Global gradient norm limit");
  add_real(t, "--gamma", tr.train.gamma, "Sequence loss decay");
  t->add_option("--cycles", tr.train.cycles, "Cycles over the source views per sample");
  add_real(t, "--fine-tune-lr", tr.train.fine_tune_lr, "Learning rate of the fine-tuning phase");
  t->add_option("--fine-tune-steps", tr.train.fine_tune_steps, "Steps of the fine-tuning phase");
  t->add_option("--val-every", tr.train.val_every, "Validation interval in steps (0: off)");
  t->add_option("--checkpoint-every", tr.train.checkpoint_every, "Checkpoint interval in steps (0: final only)");
  t->add_option("--init-seed", tr.model.init_seed, "Parameter initialization seed");
  t->add_option("--base-channels", tr.model.base_channels, "Encoder stem width");
  t->add_option("--feature-dim", tr.model.feature_dim, "Matching feature channels");
  t->add_option("--context-dim", tr.model.context_dim, "Context feature channels");
  t->add_option("--hidden-dim", tr.model.hidden_dim, "Recurrent hidden channels");
  t->add_option("--norm", tr.model.norm, "Normalization: group or batch")->check(CLI::IsMember({"group", "batch"}));

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint against ground truth");
  e->add_option("--config", config_file, "key = value file with option defaults");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file");
  e->add_option("--report", ev.report, "Output CSV")->required();
  e->add_option("--cycles", ev.cycles, "Cycles over the source views");
  e->add_flag("--oracle-gt", ev.oracle_gt, "Score the ground truth itself (harness self-test)");

  RankOptions rk;
  auto* r = app.add_subcommand("rank", "Rank source views by last correlation");
  r->add_option("--config", config_file, "key = value file with option defaults");
  r->add_option("--data", rk.data, "Dataset directory")->required();
  r->add_option("--ckpt", rk.ckpt, "Checkpoint file")->required();
  r->add_option("--report", rk.report, "Output CSV")->required();
  r->add_option("--cycles", rk.cycles, "Cycles over the source views");
  r->add_option("--blur-top", rk.blur_top, "Append blurred copies of the top K sources");
  add_real(r, "--sigma", rk.sigma, "Gaussian blur sigma in pixels");
  r->add_option("--reduction", rk.reduction, "Score reduction: all or center")
      ->check(CLI::IsMember({"all", "center"}));

  InferOptions in;
  auto* i = app.add_subcommand("infer", "Predict depth for one scene");
  i->add_option("--config", config_file, "key = value file with option defaults");
  i->add_option("--scene", in.scene, "Scene directory")->required();
  i->add_option("--ckpt", in.ckpt, "Checkpoint file")->required();
  i->add_option("--out", in.out, "Output directory")->required();
  i->add_option("--cycles", in.cycles, "Cycles over the source views");
  i->add_flag("--dump-sequence", in.dump_sequence, "Write every intermediate depth map");

  PruneOptions pr;
  auto* p = app.add_subcommand("prune", "Depth error when keeping only k source views");
  p->add_option("--config", config_file, "key = value file with option defaults");
  p->add_option("--data", pr.data, "Dataset directory")->required();
  p->add_option("--ckpt", pr.ckpt, "Checkpoint file")->required();
  p->add_option("--report", pr.report, "Output CSV")->required();
  p->add_option("--mode", pr.mode, "ranked or random")->check(CLI::IsMember({"ranked", "random"}));
  p->add_option("--k", pr.k, "Sources to keep (default: every k from N to 1)");
  p->add_option("--seed", pr.seed, "Seed of the random mode");
  p->add_option("--cycles", pr.cycles, "Cycles over the source views");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::Success& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(*g, gen, out);
    if (t->parsed()) return cmd_train(*t, tr, out);
    if (e->parsed()) return cmd_eval(*e, ev, out);
    if (r->parsed()) return cmd_rank(*r, rk, out);
    if (i->parsed()) return cmd_infer(*i, in, out);
    if (p->parsed()) return cmd_prune(*p, pr, out);
  } catch (const NumericalError& ex) {
    err << "numerical failure: " << ex.what() << "\n";
    return kExitNumerical;
  } catch (const GenerationError& ex) {
    err << "generation failed: " << ex.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"ramdepth"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ramdepth::cli
