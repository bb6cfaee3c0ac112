#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "decnn/checkpoint.hpp"
#include "decnn/infer.hpp"
#include "decnn/metrics.hpp"
#include "decnn/optim.hpp"
#include "decnn/patches.hpp"
#include "decnn/phantom.hpp"
#include "decnn/train.hpp"
#include "decnn/volume.hpp"

namespace {

// exit codes: 0 ok, 2 usage, 3 I/O, 4 file format, 5 config/shape/data
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;
constexpr int kExitConfig = 5;

decnn::PhantomSpec parse_dims(decnn::PhantomSpec spec, const std::string& dims) {
  int d, h, w;
  if (std::sscanf(dims.c_str(), "%dx%dx%d", &d, &h, &w) != 3)
    throw decnn::ConfigError("--dims must look like DxHxW, got: " + dims);
  spec.d = d;
  spec.h = h;
  spec.w = w;
  return spec;
}

std::vector<decnn::VolumePair> load_pairs(const std::vector<std::string>& srcs,
                                          const std::vector<std::string>& tgts,
                                          const char* what) {
  if (srcs.size() != tgts.size())
    throw decnn::ConfigError(std::string(what) +
                             ": source and target lists differ in length");
  std::vector<decnn::VolumePair> out;
  for (std::size_t i = 0; i < srcs.size(); ++i)
    out.push_back({decnn::volume_read(srcs[i]), decnn::volume_read(tgts[i])});
  return out;
}

void write_pgm(const std::string& path, const decnn::metrics::Image& img) {
  float lo = img.data[0], hi = img.data[0];
  for (float v : img.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const float scale = (hi > lo) ? 255.0f / (hi - lo) : 0.0f;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw decnn::IoError("cannot create " + path);
  f << "P5\n" << img.w << " " << img.h << "\n255\n";
  for (float v : img.data) {
    const int g = static_cast<int>(std::lround((v - lo) * scale));
    f.put(static_cast<char>(std::clamp(g, 0, 255)));
  }
  if (!f) throw decnn::IoError("failed writing " + path);
}

struct TrainArgs {
  std::string config_file;
  std::vector<std::string> train_src, train_tgt, val_src, val_tgt;
  std::string checkpoint = "model.deck";
  std::string csv = "train.csv";
  bool resume = false;
  bool quiet = false;
};

void add_config_overrides(CLI::App* cmd, std::map<std::string, std::string>& kv) {
  static const char* keys[] = {"k",     "channels", "in_slices", "pre_layers",
                               "lr",    "beta1",    "beta2",     "eps",
                               "batch", "beta",     "alpha",     "epochs",
                               "seed",  "patch",    "stride",    "flip"};
  for (const char* key : keys) {
    cmd->add_option_function<std::string>(
        "--" + std::string(key),
        [&kv, key](const std::string& v) { kv[key] = v; },
        "override config key '" + std::string(key) + "'");
  }
}

decnn::TrainConfig make_config(const std::string& config_file,
                               const std::map<std::string, std::string>& kv) {
  decnn::TrainConfig cfg;
  if (!config_file.empty())
    for (const auto& [k, v] : decnn::parse_config_file(config_file))
      cfg.apply(k, v);
  for (const auto& [k, v] : kv) cfg.apply(k, v);  // flags win
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"cross-modality volume synthesis with an embedding-block CNN"};
  app.require_subcommand(1);

  // --- phantom ---
  auto* phantom = app.add_subcommand(
      "phantom", "generate a paired synthetic source/target volume");
  std::string ph_dims = "40x96x96";
  decnn::PhantomSpec ph_spec;
  std::string ph_src = "phantom_src.rvf", ph_tgt = "phantom_tgt.rvf";
  phantom->add_option("--dims", ph_dims, "volume dims as DxHxW");
  phantom->add_option("--seed", ph_spec.seed, "generator seed");
  phantom->add_option("--bone-shells", ph_spec.bone_shells);
  phantom->add_option("--air-cavities", ph_spec.air_cavities);
  phantom->add_option("--tissue-blobs", ph_spec.tissue_blobs);
  phantom->add_option("--noise", ph_spec.noise_amp, "additive noise amplitude");
  phantom->add_option("--out-src", ph_src, "source volume output path");
  phantom->add_option("--out-tgt", ph_tgt, "target volume output path");

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "train a model");
  TrainArgs ta;
  std::map<std::string, std::string> train_kv;
  train_cmd->add_option("--config", ta.config_file, "key = value config file");
  add_config_overrides(train_cmd, train_kv);
  train_cmd->add_option("--train-src", ta.train_src, "training source volumes")
      ->required();
  train_cmd->add_option("--train-tgt", ta.train_tgt, "training target volumes")
      ->required();
  train_cmd->add_option("--val-src", ta.val_src, "validation source volumes");
  train_cmd->add_option("--val-tgt", ta.val_tgt, "validation target volumes");
  train_cmd->add_option("--checkpoint", ta.checkpoint, "checkpoint path");
  train_cmd->add_option("--csv", ta.csv, "per-epoch metrics CSV path");
  train_cmd->add_flag("--resume", ta.resume, "continue from the checkpoint");
  train_cmd->add_flag("--quiet", ta.quiet, "suppress progress output");

  // --- synthesize ---
  auto* synth = app.add_subcommand("synthesize",
                                   "synthesize a whole volume with a model");
  std::string sy_ckpt, sy_in, sy_out = "synth.rvf";
  int sy_slices = 3;
  synth->add_option("--checkpoint", sy_ckpt)->required();
  synth->add_option("--input", sy_in, "source volume")->required();
  synth->add_option("--output", sy_out, "synthesized volume output");
  synth->add_option("--slices", sy_slices, "axial window size (1, 3 or 5)")
      ->check(CLI::IsMember({1, 3, 5}));

  // --- evaluate ---
  auto* eval = app.add_subcommand("evaluate", "MAE/PSNR of a prediction");
  std::string ev_pred, ev_truth, ev_csv;
  eval->add_option("--pred", ev_pred)->required();
  eval->add_option("--truth", ev_truth)->required();
  eval->add_option("--csv", ev_csv, "append a 'mae,psnr' row to this CSV");

  // --- ablate ---
  auto* ablate = app.add_subcommand(
      "ablate", "train a sweep of embedding-block and plain configurations");
  std::string ab_config;
  std::map<std::string, std::string> ab_kv;
  std::vector<int> ab_klist{0, 1, 2};
  std::vector<int> ab_plain;
  std::vector<std::uint64_t> ab_seeds{0};
  std::vector<std::string> ab_train_src, ab_train_tgt, ab_val_src, ab_val_tgt;
  std::string ab_csv = "ablation.csv", ab_workdir = "ablation";
  ablate->add_option("--config", ab_config);
  add_config_overrides(ablate, ab_kv);
  ablate->add_option("--k-list", ab_klist, "embedding-block counts to sweep");
  ablate->add_option("--plain-depths", ab_plain,
                     "plain CNN depths (k=0 with this many pre layers)");
  ablate->add_option("--seeds", ab_seeds, "seeds (one full sweep per seed)");
  ablate->add_option("--train-src", ab_train_src)->required();
  ablate->add_option("--train-tgt", ab_train_tgt)->required();
  ablate->add_option("--val-src", ab_val_src);
  ablate->add_option("--val-tgt", ab_val_tgt);
  ablate->add_option("--csv", ab_csv, "summary CSV path");
  ablate->add_option("--workdir", ab_workdir,
                     "directory for per-run checkpoints and curves");

  // --- inspect ---
  auto* inspect = app.add_subcommand(
      "inspect", "rank a layer's feature maps by similarity to the truth");
  std::string in_ckpt, in_src, in_truth, in_layer = "recon",
              in_outdir = "inspect";
  int in_top = 8, in_bins = 32;
  inspect->add_option("--checkpoint", in_ckpt)->required();
  inspect->add_option("--src", in_src, "source volume")->required();
  inspect->add_option("--truth", in_truth, "ground-truth volume")->required();
  inspect->add_option("--layer", in_layer, "conv layer name");
  inspect->add_option("--top", in_top, "feature maps to export");
  inspect->add_option("--bins", in_bins, "histogram bins");
  inspect->add_option("--out-dir", in_outdir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help/usage
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*phantom) {
    const decnn::PhantomSpec spec = parse_dims(ph_spec, ph_dims);
    const decnn::PhantomPair pair = decnn::phantom_generate(spec);
    decnn::volume_write(ph_src, pair.src);
    decnn::volume_write(ph_tgt, pair.tgt);
    std::cout << "wrote " << ph_src << " and " << ph_tgt << " (" << spec.d
              << "x" << spec.h << "x" << spec.w << ", seed " << spec.seed
              << ")\n";
  } else if (*train_cmd) {
    const decnn::TrainConfig cfg = make_config(ta.config_file, train_kv);
    decnn::TrainResult r =
        decnn::train(cfg, load_pairs(ta.train_src, ta.train_tgt, "train"),
                     load_pairs(ta.val_src, ta.val_tgt, "val"), ta.checkpoint,
                     ta.csv, ta.resume, !ta.quiet);
    std::cout << "trained " << r.epochs_run << " epoch(s); checkpoint "
              << ta.checkpoint << ", metrics " << ta.csv << "\n";
  } else if (*synth) {
    decnn::Checkpoint::Loaded loaded = decnn::Checkpoint::load(sy_ckpt);
    decnn::Volume src = decnn::volume_read(sy_in);
    const bool was_normalized = src.norm.has_value();
    if (!was_normalized) src = decnn::normalize(src);
    decnn::Volume out = decnn::synthesize(*loaded.model, src, sy_slices);
    if (out.norm) out = decnn::denormalize(out);
    decnn::volume_write(sy_out, out);
    std::cout << "wrote " << sy_out << "\n";
  } else if (*eval) {
    const decnn::Volume pred = decnn::volume_read(ev_pred);
    const decnn::Volume truth = decnn::volume_read(ev_truth);
    const double mae = decnn::metrics::mae(pred, truth);
    const std::optional<double> psnr = decnn::metrics::psnr(pred, truth);
    char psnr_str[32];
    if (psnr)
      std::snprintf(psnr_str, sizeof(psnr_str), "%.9g", *psnr);
    else
      std::snprintf(psnr_str, sizeof(psnr_str), "inf");
    std::printf("mae,psnr\n%.9g,%s\n", mae, psnr_str);
    if (!ev_csv.empty()) {
      const bool fresh = !std::filesystem::exists(ev_csv);
      std::ofstream f(ev_csv, std::ios::app);
      if (!f) throw decnn::IoError("cannot append to " + ev_csv);
      if (fresh) f << "mae,psnr\n";
      char row[96];
      std::snprintf(row, sizeof(row), "%.9g,%s\n", mae, psnr_str);
      f << row;
    }
  } else if (*ablate) {
    std::filesystem::create_directories(ab_workdir);
    auto train_pairs = load_pairs(ab_train_src, ab_train_tgt, "train");
    auto val_pairs = load_pairs(ab_val_src, ab_val_tgt, "val");
    std::ofstream csv(ab_csv, std::ios::trunc);
    if (!csv) throw decnn::IoError("cannot create " + ab_csv);
    csv << "config,seed,transform_convs,final_val_psnr,final_val_mae\n";
    struct Run {
      std::string label;
      int k;
      int pre_layers;
    };
    std::vector<Run> runs;
    const decnn::TrainConfig base = make_config(ab_config, ab_kv);
    for (int k : ab_klist)
      runs.push_back({"ebd" + std::to_string(k), k, base.model.pre_layers});
    for (int depth : ab_plain)
      runs.push_back({"plain" + std::to_string(depth), 0, depth});
    for (std::uint64_t seed : ab_seeds) {
      for (const Run& run : runs) {
        decnn::TrainConfig cfg = base;
        cfg.model.k = run.k;
        cfg.model.pre_layers = run.pre_layers;
        cfg.seed = seed;
        const std::string stem = ab_workdir + "/" + run.label + "_s" +
                                 std::to_string(seed);
        decnn::TrainResult r = decnn::train(cfg, train_pairs, val_pairs,
                                            stem + ".deck", stem + ".csv");
        const double psnr = r.rows.empty() ? 0.0 : r.rows.back().val_psnr;
        const double mae = r.rows.empty() ? 0.0 : r.rows.back().val_mae;
        char row[160];
        std::snprintf(row, sizeof(row), "%s,%llu,%d,%.9g,%.9g\n",
                      run.label.c_str(),
                      static_cast<unsigned long long>(seed),
                      cfg.model.transform_conv_count(), psnr, mae);
        csv << row;
        csv.flush();
        std::cout << run.label << " seed " << seed << ": val_psnr " << psnr
                  << " val_mae " << mae << "\n";
      }
    }
  } else if (*inspect) {
    decnn::Checkpoint::Loaded loaded = decnn::Checkpoint::load(in_ckpt);
    decnn::Volume src = decnn::volume_read(in_src);
    decnn::Volume truth = decnn::volume_read(in_truth);
    if (!src.norm) src = decnn::normalize(src);
    if (!truth.norm) truth = decnn::normalize(truth);
    const int s = loaded.config.in_slices;
    if (src.d < s) throw decnn::GeometryError("inspect: volume too shallow");

    const int z0 = (src.d - s) / 2;  // center axial window
    decnn::Tensor window(1, s, src.h, src.w);
    const std::size_t plane = static_cast<std::size_t>(src.h) * src.w;
    for (int i = 0; i < s; ++i)
      std::copy_n(src.data.data() + static_cast<std::size_t>(z0 + i) * plane,
                  plane, window.data() + static_cast<std::size_t>(i) * plane);
    const decnn::ForwardTrace trace = loaded.model->forward(window);
    const auto acts = trace.named_activation();
    const auto it = acts.find(in_layer);
    if (it == acts.end()) {
      std::string names;
      for (const auto& [name, _] : acts) names += " " + name;
      throw decnn::ConfigError("inspect: unknown layer '" + in_layer +
                               "'; valid layers:" + names);
    }
    decnn::metrics::Image ref(src.h, src.w);
    const int zc = z0 + s / 2;
    std::copy_n(truth.data.data() + static_cast<std::size_t>(zc) * plane,
                plane, ref.data.data());
    const auto ranking =
        decnn::metrics::rank_feature_maps(*it->second, ref, in_bins);

    std::filesystem::create_directories(in_outdir);
    std::ofstream csv(in_outdir + "/smi.csv", std::ios::trunc);
    if (!csv) throw decnn::IoError("cannot create " + in_outdir + "/smi.csv");
    csv << "rank,channel,smi\n";
    const int top = std::min<int>(in_top, static_cast<int>(ranking.size()));
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      char row[96];
      std::snprintf(row, sizeof(row), "%zu,%d,%.9g\n", i, ranking[i].channel,
                    ranking[i].smi);
      csv << row;
      if (static_cast<int>(i) < top) {
        decnn::metrics::Image img(src.h, src.w);
        for (int y = 0; y < src.h; ++y)
          for (int x = 0; x < src.w; ++x)
            img.at(y, x) = it->second->at(0, ranking[i].channel, y, x);
        char name[64];
        std::snprintf(name, sizeof(name), "/rank%02zu_ch%03d.pgm", i,
                      ranking[i].channel);
        write_pgm(in_outdir + name, img);
      }
    }
    std::cout << "wrote " << top << " feature map(s) and SMI ranking to "
              << in_outdir << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const decnn::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const decnn::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const decnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
