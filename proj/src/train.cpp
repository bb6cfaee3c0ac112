#include "decnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "decnn/checkpoint.hpp"
#include "decnn/infer.hpp"
#include "decnn/optim.hpp"
#include "decnn/patches.hpp"

namespace decnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for '" + key + "': " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for '" + key + "': " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad bool for '" + key + "': " + v);
}

std::string format_row(const EpochRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f",
                r.epoch, r.train_loss, r.train_final_l2, r.train_aux_l2,
                r.val_psnr, r.val_mae, r.wall_seconds);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (lr <= 0 || beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 ||
      eps <= 0)
    throw ConfigError("train config: bad optimizer hyperparameters");
  if (batch < 1) throw ConfigError("train config: batch must be >= 1");
  if (beta < 0 || alpha < 0)
    throw ConfigError("train config: beta and alpha must be >= 0");
  if (epochs < 0) throw ConfigError("train config: epochs must be >= 0");
  if (patch < 1 || stride < 1)
    throw ConfigError("train config: patch and stride must be >= 1");
}

void TrainConfig::apply(const std::string& key, const std::string& value) {
  if (key == "k") model.k = to_int(key, value);
  else if (key == "channels") model.channels = to_int(key, value);
  else if (key == "in_slices") model.in_slices = to_int(key, value);
  else if (key == "pre_layers") model.pre_layers = to_int(key, value);
  else if (key == "lr") lr = to_double(key, value);
  else if (key == "beta1") beta1 = to_double(key, value);
  else if (key == "beta2") beta2 = to_double(key, value);
  else if (key == "eps") eps = to_double(key, value);
  else if (key == "batch") batch = to_int(key, value);
  else if (key == "beta") beta = to_double(key, value);
  else if (key == "alpha") alpha = to_double(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "patch") patch = to_int(key, value);
  else if (key == "stride") stride = to_int(key, value);
  else if (key == "flip") flip = to_bool(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value'");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

TrainResult train(const TrainConfig& cfg, std::vector<VolumePair> train_vols,
                  std::vector<VolumePair> val_vols,
                  const std::string& checkpoint_path,
                  const std::string& csv_path, bool resume, bool verbose) {
  cfg.validate();
  if (train_vols.empty()) throw DataError("train: no training volumes");

  for (VolumePair& p : train_vols) {
    p.src = normalize(p.src);
    p.tgt = normalize(p.tgt);
  }
  for (VolumePair& p : val_vols) {
    p.src = normalize(p.src);
    p.tgt = normalize(p.tgt);
  }

  // full patch origin list across volumes, flips appended
  std::vector<PatchOrigin> origins;
  for (std::size_t vi = 0; vi < train_vols.size(); ++vi) {
    const Volume& v = train_vols[vi].src;
    if (train_vols[vi].tgt.d != v.d || train_vols[vi].tgt.h != v.h ||
        train_vols[vi].tgt.w != v.w)
      throw ShapeError("train: source/target volume dims differ");
    std::vector<PatchOrigin> grid =
        patch_grid(v.d, v.h, v.w, cfg.patch, cfg.stride, cfg.model.in_slices);
    for (PatchOrigin& o : grid) {
      o.volume = static_cast<int>(vi);
      origins.push_back(o);
    }
  }
  if (cfg.flip) {
    const std::size_t plain = origins.size();
    origins.reserve(plain * 2);
    for (std::size_t i = 0; i < plain; ++i) {
      PatchOrigin o = origins[i];
      o.flipped = true;
      origins.push_back(o);
    }
  }

  TrainResult result;
  Rng init_rng(cfg.seed);
  result.model = std::make_unique<DecnnModel>(cfg.model, init_rng);
  Adam adam(result.model->params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  int start_epoch = 0;

  if (resume) {
    Checkpoint::Loaded loaded = Checkpoint::load(checkpoint_path);
    if (!(loaded.config == cfg.model))
      throw ConfigError("resume: checkpoint model config differs from the "
                        "requested config");
    result.model = std::move(loaded.model);
    adam = Adam(result.model->params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    if (loaded.has_optimizer) restore_adam(adam, loaded);
    start_epoch = loaded.epochs_done;
  }

  // fresh run: header-only CSV; resumed run appends below existing rows
  if (!resume) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw IoError("cannot create CSV " + csv_path);
    csv << kTrainCsvHeader << "\n";
  }
  if (start_epoch == 0 && cfg.epochs == 0) {
    Checkpoint::save(checkpoint_path, *result.model, 0, 0, &adam);
    return result;
  }

  auto evaluate_val = [&](EpochRow& row) {
    if (val_vols.empty()) return;
    double psnr_sum = 0.0, mae_sum = 0.0;
    for (const VolumePair& p : val_vols) {
      const EvalResult r = synthesize_metrics(*result.model, p.src, p.tgt,
                                              cfg.model.in_slices);
      psnr_sum += r.psnr_infinite ? 99.0 : r.psnr_db;
      mae_sum += r.mae_hu;
    }
    row.val_psnr = psnr_sum / static_cast<double>(val_vols.size());
    row.val_mae = mae_sum / static_cast<double>(val_vols.size());
  };

  BatchIter iter(origins.size(), cfg.batch, cfg.seed);
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0, final_sum = 0.0, aux_sum = 0.0;
    std::size_t samples = 0;
    for (const std::vector<std::size_t>& batch : iter.epoch_batches(epoch)) {
      const int n = static_cast<int>(batch.size());
      Tensor src(n, cfg.model.in_slices, cfg.patch, cfg.patch);
      Tensor tgt(n, cfg.model.in_slices, cfg.patch, cfg.patch);
      for (int b = 0; b < n; ++b) {
        const PatchOrigin& o = origins[batch[b]];
        PatchPair pp = extract_patch(train_vols[o.volume].src,
                                     train_vols[o.volume].tgt, o, cfg.patch,
                                     cfg.model.in_slices);
        const std::size_t len = pp.source.size();
        std::copy_n(pp.source.data(), len,
                    src.data() + static_cast<std::size_t>(b) * len);
        std::copy_n(pp.target.data(), len,
                    tgt.data() + static_cast<std::size_t>(b) * len);
      }
      const ForwardTrace trace = result.model->forward(src);
      const DecnnModel::LossParts parts =
          result.model->loss(trace, tgt, cfg.beta, cfg.alpha);
      result.model->backward(trace, tgt, cfg.beta, cfg.alpha);
      adam.step(result.model->params());
      loss_sum += parts.total;
      final_sum += parts.final_l2;
      for (double a : parts.aux_l2) aux_sum += a;
      samples += batch.size();
    }

    EpochRow row;
    row.epoch = epoch + 1;
    row.train_loss = loss_sum / static_cast<double>(samples);
    row.train_final_l2 = final_sum / static_cast<double>(samples);
    row.train_aux_l2 = aux_sum / static_cast<double>(samples);
    evaluate_val(row);
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.rows.push_back(row);
    ++result.epochs_run;

    {
      std::ofstream csv(csv_path, std::ios::app);
      if (!csv) throw IoError("cannot append to CSV " + csv_path);
      csv << format_row(row) << "\n";
    }
    Checkpoint::save(checkpoint_path, *result.model, adam.step_count(),
                     epoch + 1, &adam);
    if (verbose)
      std::fprintf(stderr,
                   "epoch %d/%d loss %.6g val_psnr %.3f (%.1fs)\n", epoch + 1,
                   cfg.epochs, row.train_loss, row.val_psnr, row.wall_seconds);
  }
  return result;
}

}  // namespace decnn
