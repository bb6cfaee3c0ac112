#include "decnn/model.hpp"

namespace decnn {

void ModelConfig::validate() const {
  if (k < 0) throw ConfigError("model config: k must be >= 0");
  if (channels < 1) throw ConfigError("model config: channels must be >= 1");
  if (in_slices < 1 || in_slices % 2 == 0)
    throw ConfigError("model config: in_slices must be odd and >= 1");
  if (pre_layers < 1) throw ConfigError("model config: pre_layers must be >= 1");
  if (kernel < 1 || kernel % 2 == 0)
    throw ConfigError("model config: kernel must be odd and >= 1");
}

DecnnModel::DecnnModel(const ModelConfig& config, Rng& rng)
    : recon("recon", config.channels, config.in_slices, config.kernel),
      config_(config) {
  config.validate();
  const int ch = config.channels;
  const int s = config.in_slices;
  for (int i = 0; i < config.pre_layers; ++i) {
    const int in_c = (i == 0) ? s : ch;
    pre.emplace_back("pre." + std::to_string(i), in_c, ch, config.kernel);
    pre_prelu.emplace_back("pre." + std::to_string(i) + ".prelu", ch);
  }
  for (int i = 0; i < config.k; ++i) {
    const std::string b = "ebd." + std::to_string(i);
    blocks.push_back(EmbeddingBlock{
        ConvLayer(b + ".recon", ch, s, config.kernel),
        ConvLayer(b + ".conv_a", ch, ch, config.kernel),
        PreluLayer(b + ".conv_a.prelu", ch),
        ConvLayer(b + ".fuse", ch + s, ch, config.kernel),
        PreluLayer(b + ".fuse.prelu", ch),
        ConvLayer("post." + std::to_string(i), ch, ch, config.kernel),
        PreluLayer("post." + std::to_string(i) + ".prelu", ch)});
  }
  for (ConvLayer* c : conv_layers()) c->he_init(rng);
}

ForwardTrace DecnnModel::forward(const Tensor& x) const {
  if (x.shape().c != config_.in_slices)
    throw ShapeError("model forward: input must have " +
                     std::to_string(config_.in_slices) + " channels");
  ForwardTrace t;
  Tensor cur = x;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    t.pre_conv_in.push_back(std::move(cur));
    t.pre_prelu_in.push_back(pre[i].forward(t.pre_conv_in[i]));
    cur = pre_prelu[i].forward(t.pre_prelu_in[i]);
  }
  for (const EmbeddingBlock& b : blocks) {
    ForwardTrace::BlockCache bc;
    bc.block_in = std::move(cur);
    t.tentatives.push_back(b.recon.forward(bc.block_in));
    bc.conv_a_out = b.conv_a.forward(bc.block_in);
    bc.prelu_a_out = b.prelu_a.forward(bc.conv_a_out);
    bc.fuse_in = concat_forward(bc.prelu_a_out, t.tentatives.back());
    bc.fuse_out = b.fuse.forward(bc.fuse_in);
    bc.refine_in = b.prelu_fuse.forward(bc.fuse_out);
    bc.refine_out = b.refine.forward(bc.refine_in);
    cur = b.prelu_refine.forward(bc.refine_out);
    t.block_cache.push_back(std::move(bc));
  }
  t.recon_in = std::move(cur);
  t.final = recon.forward(t.recon_in);
  return t;
}

Tensor DecnnModel::predict(const Tensor& x) const {
  if (x.shape().c != config_.in_slices)
    throw ShapeError("model predict: input must have " +
                     std::to_string(config_.in_slices) + " channels");
  Tensor cur = x;
  for (std::size_t i = 0; i < pre.size(); ++i)
    cur = pre_prelu[i].forward(pre[i].forward(cur));
  for (const EmbeddingBlock& b : blocks) {
    Tensor tent = b.recon.forward(cur);
    Tensor a = b.prelu_a.forward(b.conv_a.forward(cur));
    cur = b.prelu_fuse.forward(b.fuse.forward(concat_forward(a, tent)));
    cur = b.prelu_refine.forward(b.refine.forward(cur));
  }
  return recon.forward(cur);
}

DecnnModel::LossParts DecnnModel::loss(const ForwardTrace& trace,
                                       const Tensor& target, double beta,
                                       double alpha) const {
  if (!(trace.final.shape() == target.shape()))
    throw ShapeError("loss: target shape must match the final output");
  if (trace.tentatives.size() != static_cast<std::size_t>(config_.k))
    throw StateError("loss: trace does not match this model's configuration");
  LossParts parts;
  parts.final_l2 = trace.final.sub(target).sum_sq();
  for (const Tensor& tent : trace.tentatives)
    parts.aux_l2.push_back(tent.sub(target).sum_sq());
  for (const ConvLayer* c : conv_layers()) parts.reg += c->kernels.sum_sq();
  parts.total = parts.final_l2 + alpha * parts.reg;
  for (double a : parts.aux_l2) parts.total += beta * a;
  return parts;
}

void DecnnModel::backward(const ForwardTrace& trace, const Tensor& target,
                          double beta, double alpha) {
  if (trace.block_cache.size() != blocks.size() ||
      trace.pre_conv_in.size() != pre.size())
    throw StateError("backward: trace does not match this model's configuration");
  if (!(trace.final.shape() == target.shape()))
    throw ShapeError("backward: target shape must match the final output");
  zero_grad();

  Tensor g = trace.final.sub(target).scale(2.0f);
  g = recon.backward(trace.recon_in, g);
  for (int i = static_cast<int>(blocks.size()) - 1; i >= 0; --i) {
    EmbeddingBlock& b = blocks[i];
    const ForwardTrace::BlockCache& bc = trace.block_cache[i];
    g = b.prelu_refine.backward(bc.refine_out, g);
    g = b.refine.backward(bc.refine_in, g);
    g = b.prelu_fuse.backward(bc.fuse_out, g);
    g = b.fuse.backward(bc.fuse_in, g);
    auto [ga, gt] = concat_backward(g, config_.channels, config_.in_slices);
    // auxiliary supervision joins the concat re-injection path here
    gt.add_inplace(
        trace.tentatives[i].sub(target).scale(2.0f * static_cast<float>(beta)));
    g = b.prelu_a.backward(bc.conv_a_out, ga);
    g = b.conv_a.backward(bc.block_in, g);
    g.add_inplace(b.recon.backward(bc.block_in, gt));
  }
  for (int i = static_cast<int>(pre.size()) - 1; i >= 0; --i) {
    g = pre_prelu[i].backward(trace.pre_prelu_in[i], g);
    g = pre[i].backward(trace.pre_conv_in[i], g);
  }

  // L2 regularization applies to conv kernels only
  const float two_alpha = 2.0f * static_cast<float>(alpha);
  for (ConvLayer* c : conv_layers())
    for (std::size_t j = 0; j < c->kernels.size(); ++j)
      c->grad_kernels[j] += two_alpha * c->kernels[j];
}

void DecnnModel::zero_grad() {
  for (ConvLayer* c : conv_layers()) c->zero_grad();
  for (PreluLayer& p : pre_prelu) p.zero_grad();
  for (EmbeddingBlock& b : blocks) {
    b.prelu_a.zero_grad();
    b.prelu_fuse.zero_grad();
    b.prelu_refine.zero_grad();
  }
}

std::vector<const ConvLayer*> DecnnModel::conv_layers() const {
  std::vector<const ConvLayer*> out;
  for (const ConvLayer& c : pre) out.push_back(&c);
  for (const EmbeddingBlock& b : blocks) {
    out.push_back(&b.recon);
    out.push_back(&b.conv_a);
    out.push_back(&b.fuse);
    out.push_back(&b.refine);
  }
  out.push_back(&recon);
  return out;
}

std::vector<ConvLayer*> DecnnModel::conv_layers() {
  std::vector<ConvLayer*> out;
  for (ConvLayer& c : pre) out.push_back(&c);
  for (EmbeddingBlock& b : blocks) {
    out.push_back(&b.recon);
    out.push_back(&b.conv_a);
    out.push_back(&b.fuse);
    out.push_back(&b.refine);
  }
  out.push_back(&recon);
  return out;
}

std::vector<ParamRef> DecnnModel::params() {
  std::vector<ParamRef> out;
  auto add_conv = [&out](ConvLayer& c) {
    out.push_back({c.name() + ".weight", c.kernels.data(),
                   c.grad_kernels.data(), c.kernels.size(), true});
    out.push_back({c.name() + ".bias", c.bias.data(), c.grad_bias.data(),
                   c.bias.size(), false});
  };
  auto add_prelu = [&out](PreluLayer& p) {
    out.push_back({p.name() + ".alpha", p.alpha.data(), p.grad_alpha.data(),
                   p.alpha.size(), false});
  };
  for (std::size_t i = 0; i < pre.size(); ++i) {
    add_conv(pre[i]);
    add_prelu(pre_prelu[i]);
  }
  for (EmbeddingBlock& b : blocks) {
    add_conv(b.recon);
    add_conv(b.conv_a);
    add_prelu(b.prelu_a);
    add_conv(b.fuse);
    add_prelu(b.prelu_fuse);
    add_conv(b.refine);
    add_prelu(b.prelu_refine);
  }
  add_conv(recon);
  return out;
}

std::map<std::string, const Tensor*> ForwardTrace::named_activation() const {
  std::map<std::string, const Tensor*> out;
  const std::size_t p = pre_conv_in.size();
  for (std::size_t i = 0; i < p; ++i) {
    const Tensor* act;
    if (i + 1 < p)
      act = &pre_conv_in[i + 1];
    else if (!block_cache.empty())
      act = &block_cache[0].block_in;
    else
      act = &recon_in;
    out["pre." + std::to_string(i)] = act;
  }
  for (std::size_t i = 0; i < block_cache.size(); ++i) {
    const ForwardTrace::BlockCache& bc = block_cache[i];
    out["ebd." + std::to_string(i) + ".recon"] = &tentatives[i];
    out["ebd." + std::to_string(i) + ".conv_a"] = &bc.prelu_a_out;
    out["ebd." + std::to_string(i) + ".fuse"] = &bc.refine_in;
    const Tensor* post = (i + 1 < block_cache.size())
                             ? &block_cache[i + 1].block_in
                             : &recon_in;
    out["post." + std::to_string(i)] = post;
  }
  out["recon"] = &final;
  return out;
}

}  // namespace decnn
