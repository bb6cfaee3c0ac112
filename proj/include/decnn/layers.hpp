#pragma once

#include <string>
#include <utility>
#include <vector>

#include "decnn/tensor.hpp"

namespace decnn {

// Zero-padded 2D convolution (cross-correlation convention, deep-learning
// style). Spatial size is preserved: padding = (k-1)/2 on each side.
class ConvLayer {
 public:
  ConvLayer(std::string name, int in_c, int out_c, int kernel = 3);

  Tensor forward(const Tensor& x) const;
  // Accumulates grad_kernels / grad_bias and returns grad w.r.t. x.
  Tensor backward(const Tensor& x, const Tensor& grad_out);

  // kernels ~ N(0, sqrt(2 / (in_c*kh*kw))), bias = 0.
  void he_init(Rng& rng);
  void zero_grad();

  const std::string& name() const { return name_; }
  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }
  int kernel() const { return k_; }

  Tensor kernels;             // (out_c, in_c, k, k)
  std::vector<float> bias;    // out_c
  Tensor grad_kernels;
  std::vector<float> grad_bias;

 private:
  std::string name_;
  int in_c_;
  int out_c_;
  int k_;
};

// Per-channel parametric ReLU: max(0,x) + alpha*min(0,x).
// Derivative w.r.t. x at x == 0 is taken as 1.
class PreluLayer {
 public:
  PreluLayer(std::string name, int channels, float init_alpha = 0.25f);

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& grad_out);

  void zero_grad();

  const std::string& name() const { return name_; }
  int channels() const { return static_cast<int>(alpha.size()); }

  std::vector<float> alpha;
  std::vector<float> grad_alpha;

 private:
  std::string name_;
};

// Channel concatenation [a; b] and its adjoint split.
Tensor concat_forward(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> concat_backward(const Tensor& grad_out, int c_a,
                                          int c_b);

}  // namespace decnn
