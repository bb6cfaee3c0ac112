#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "decnn/model.hpp"
#include "decnn/optim.hpp"

namespace decnn {

// "DECK" checkpoint: model config, every parameter array by name, the
// training-step counter, and (optionally) Adam moment buffers so training
// can resume exactly.
struct Checkpoint {
  ModelConfig config;
  std::uint64_t train_step = 0;
  int epochs_done = 0;

  static void save(const std::string& path, DecnnModel& model,
                   std::uint64_t train_step, int epochs_done,
                   Adam* optimizer /* nullable */);

  // Rebuilds the model (weights loaded, not re-initialized). When
  // `optimizer` is given, its moment buffers and step counter are restored;
  // hyperparameters must already match the caller's intent.
  struct Loaded {
    std::unique_ptr<DecnnModel> model;
    ModelConfig config;
    std::uint64_t train_step = 0;
    int epochs_done = 0;
    bool has_optimizer = false;
    double lr = 0, beta1 = 0, beta2 = 0, eps = 0;
    std::vector<std::vector<float>> m, v;
  };
  static Loaded load(const std::string& path);
};

// Applies saved optimizer state onto a fresh Adam instance.
void restore_adam(Adam& adam, const Checkpoint::Loaded& loaded);

}  // namespace decnn
