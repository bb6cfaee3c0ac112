#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "decnn/layers.hpp"

namespace decnn {

struct ModelConfig {
  int k = 2;            // embedding block count
  int channels = 128;   // feature-map width in the transform stage
  int in_slices = 3;    // input/output slice count (odd)
  int pre_layers = 5;   // conv layers before the first embedding block
  int kernel = 3;

  void validate() const;
  // conv layers on the transform path: pre_layers + 3 per embedding block
  int transform_conv_count() const { return pre_layers + 3 * k; }
  bool operator==(const ModelConfig&) const = default;
};

// One embedding block: tentative reconstruction of the output modality,
// a transform conv, channel concat of the tentative output, and a fuse
// conv back to the working width. A refine conv follows each block.
struct EmbeddingBlock {
  ConvLayer recon;   // channels -> in_slices, no activation
  ConvLayer conv_a;  // channels -> channels
  PreluLayer prelu_a;
  ConvLayer fuse;    // channels + in_slices -> channels
  PreluLayer prelu_fuse;
  ConvLayer refine;  // channels -> channels, appended after the block
  PreluLayer prelu_refine;
};

// Mutable view of one parameter array and its gradient buffer.
struct ParamRef {
  std::string name;
  float* data;
  float* grad;
  std::size_t size;
  bool is_weight;  // true for conv kernels (L2-regularized), false otherwise
};

struct ForwardTrace;

class DecnnModel {
 public:
  DecnnModel(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }

  ForwardTrace forward(const Tensor& x) const;
  // Inference-only pass: no cached activations retained.
  Tensor predict(const Tensor& x) const;

  struct LossParts {
    double total = 0.0;
    double final_l2 = 0.0;
    std::vector<double> aux_l2;
    double reg = 0.0;
  };
  // Eq-style deep-supervision objective:
  //   |final - target|^2 + beta * sum_k |tentative_k - target|^2 + alpha * reg
  // where reg is the sum of squares of all conv kernels.
  LossParts loss(const ForwardTrace& trace, const Tensor& target, double beta,
                 double alpha) const;

  // Fills every parameter's grad buffer with dL/dparam for the loss above.
  void backward(const ForwardTrace& trace, const Tensor& target, double beta,
                double alpha);

  void zero_grad();
  std::vector<ParamRef> params();
  std::vector<const ConvLayer*> conv_layers() const;
  std::vector<ConvLayer*> conv_layers();

  std::vector<ConvLayer> pre;
  std::vector<PreluLayer> pre_prelu;
  std::vector<EmbeddingBlock> blocks;
  ConvLayer recon;  // final reconstruction, no activation

 private:
  ModelConfig config_;
};

struct ForwardTrace {
  Tensor final;                  // (n, in_slices, h, w)
  std::vector<Tensor> tentatives;

  // cached inputs to each layer, in execution order, for backward
  std::vector<Tensor> pre_conv_in;     // input to pre[i]
  std::vector<Tensor> pre_prelu_in;    // pre-activation of pre_prelu[i]
  struct BlockCache {
    Tensor block_in;      // input feature maps (shared by recon and conv_a)
    Tensor conv_a_out;    // pre-activation of prelu_a
    Tensor prelu_a_out;   // first concat operand
    Tensor fuse_in;       // concatenated maps
    Tensor fuse_out;      // pre-activation of prelu_fuse
    Tensor refine_in;
    Tensor refine_out;    // pre-activation of prelu_refine
  };
  std::vector<BlockCache> block_cache;
  Tensor recon_in;  // input to the final reconstruction conv

  // post-activation output of every conv layer, keyed by conv name
  // (feature-map inspection)
  std::map<std::string, const Tensor*> named_activation() const;
};

}  // namespace decnn
