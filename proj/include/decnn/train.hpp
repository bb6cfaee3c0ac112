#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "decnn/model.hpp"
#include "decnn/volume.hpp"

namespace decnn {

// Full training recipe in one serializable record. Defaults follow the
// published recipe: lr 1e-5, momentum 0.9, batch 16, beta 0.5, alpha 1e-3,
// 64x64 patches on a stride-8 grid with left-right flip augmentation.
struct TrainConfig {
  ModelConfig model;
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch = 16;
  double beta = 0.5;    // auxiliary-loss weight
  double alpha = 0.001; // L2 regularization weight
  int epochs = 10;
  std::uint64_t seed = 0;
  int patch = 64;
  int stride = 8;
  bool flip = true;

  void validate() const;
  // Sets one knob from its textual form; unknown key -> ConfigError.
  void apply(const std::string& key, const std::string& value);
};

// Flat "key = value" file with '#' comments; returns keys in file order.
std::vector<std::pair<std::string, std::string>> parse_config_file(
    const std::string& path);

struct VolumePair {
  Volume src;
  Volume tgt;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;      // mean per-sample total loss
  double train_final_l2 = 0.0;
  double train_aux_l2 = 0.0;
  double val_psnr = 0.0;
  double val_mae = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::unique_ptr<DecnnModel> model;
  std::vector<EpochRow> rows;
  int epochs_run = 0;
};

// Trains on the given raw volume pairs (normalized internally). Appends one
// CSV row and rewrites the checkpoint after every epoch. With `resume`, an
// existing checkpoint continues the run; its config must match.
TrainResult train(const TrainConfig& cfg, std::vector<VolumePair> train_vols,
                  std::vector<VolumePair> val_vols,
                  const std::string& checkpoint_path,
                  const std::string& csv_path, bool resume = false,
                  bool verbose = false);

inline const char* kTrainCsvHeader =
    "epoch,train_loss,train_final_l2,train_aux_l2,val_psnr,val_mae,"
    "wall_seconds";

}  // namespace decnn
