#pragma once

#include <cstdint>
#include <vector>

#include "decnn/model.hpp"

namespace decnn {

// Bias-corrected Adam over a fixed parameter list. Gradients are consumed
// (zeroed) by each step.
class Adam {
 public:
  Adam(const std::vector<ParamRef>& params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  // One update from the currently filled grad buffers.
  void step(const std::vector<ParamRef>& params);

  std::uint64_t step_count() const { return t_; }
  double lr() const { return lr_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<std::vector<float>>& moments_m() { return m_; }
  std::vector<std::vector<float>>& moments_v() { return v_; }
  void set_step_count(std::uint64_t t) { t_ = t; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace decnn
