#include "decnn/layers.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

namespace decnn {

namespace {

using MatRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

// col(ic*k*k + ky*k + kx, y*w + x) = x_padded(ic, y+ky-p, x+kx-p)
void im2col(const float* src, int c, int h, int w, int k, float* col) {
  const int p = (k - 1) / 2;
  const int hw = h * w;
  for (int ic = 0; ic < c; ++ic) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = col + static_cast<std::size_t>((ic * k + ky) * k + kx) * hw;
        const int dy = ky - p;
        const int dx = kx - p;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          float* dst = row + y * w;
          if (sy < 0 || sy >= h) {
            std::memset(dst, 0, sizeof(float) * w);
            continue;
          }
          const float* srow = src + (static_cast<std::size_t>(ic) * h + sy) * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          if (x0 > 0) std::memset(dst, 0, sizeof(float) * x0);
          if (x1 > x0) std::memcpy(dst + x0, srow + x0 + dx, sizeof(float) * (x1 - x0));
          if (x1 < w) std::memset(dst + x1, 0, sizeof(float) * (w - x1));
        }
      }
    }
  }
}

// adjoint of im2col: scatter-add col back into the (c,h,w) image
void col2im(const float* col, int c, int h, int w, int k, float* dst) {
  const int p = (k - 1) / 2;
  const int hw = h * w;
  for (int ic = 0; ic < c; ++ic) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row =
            col + static_cast<std::size_t>((ic * k + ky) * k + kx) * hw;
        const int dy = ky - p;
        const int dx = kx - p;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          float* drow = dst + (static_cast<std::size_t>(ic) * h + sy) * w;
          const float* srow = row + y * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int x = x0; x < x1; ++x) drow[x + dx] += srow[x];
        }
      }
    }
  }
}

}  // namespace

ConvLayer::ConvLayer(std::string name, int in_c, int out_c, int kernel)
    : kernels(out_c, in_c, kernel, kernel),
      bias(out_c, 0.0f),
      grad_kernels(out_c, in_c, kernel, kernel),
      grad_bias(out_c, 0.0f),
      name_(std::move(name)),
      in_c_(in_c),
      out_c_(out_c),
      k_(kernel) {
  if (in_c < 1 || out_c < 1 || kernel < 1 || kernel % 2 == 0)
    throw ParamError("ConvLayer: channels >= 1 and odd kernel required");
}

Tensor ConvLayer::forward(const Tensor& x) const {
  const Shape s = x.shape();
  if (s.c != in_c_)
    throw ShapeError("conv '" + name_ + "': input has " + std::to_string(s.c) +
                     " channels, expected " + std::to_string(in_c_));
  const int hw = s.h * s.w;
  const int kk = in_c_ * k_ * k_;
  Tensor out(s.n, out_c_, s.h, s.w);
  std::vector<float> col(static_cast<std::size_t>(kk) * hw);
  CMapRM kmat(kernels.data(), out_c_, kk);
  for (int n = 0; n < s.n; ++n) {
    const float* xi = x.data() + static_cast<std::size_t>(n) * in_c_ * hw;
    im2col(xi, in_c_, s.h, s.w, k_, col.data());
    CMapRM cmat(col.data(), kk, hw);
    MapRM omat(out.data() + static_cast<std::size_t>(n) * out_c_ * hw, out_c_, hw);
    omat.noalias() = kmat * cmat;
    for (int o = 0; o < out_c_; ++o) omat.row(o).array() += bias[o];
  }
  return out;
}

Tensor ConvLayer::backward(const Tensor& x, const Tensor& grad_out) {
  const Shape s = x.shape();
  if (s.c != in_c_) throw ShapeError("conv '" + name_ + "': bad input shape");
  const Shape g = grad_out.shape();
  if (g.n != s.n || g.c != out_c_ || g.h != s.h || g.w != s.w)
    throw ShapeError("conv '" + name_ + "': grad_out shape mismatch");

  const int hw = s.h * s.w;
  const int kk = in_c_ * k_ * k_;
  Tensor grad_in(s.n, in_c_, s.h, s.w, 0.0f);
  std::vector<float> col(static_cast<std::size_t>(kk) * hw);
  std::vector<float> gcol(static_cast<std::size_t>(kk) * hw);
  CMapRM kmat(kernels.data(), out_c_, kk);
  MapRM gkmat(grad_kernels.data(), out_c_, kk);
  for (int n = 0; n < s.n; ++n) {
    const float* xi = x.data() + static_cast<std::size_t>(n) * in_c_ * hw;
    CMapRM gmat(grad_out.data() + static_cast<std::size_t>(n) * out_c_ * hw,
                out_c_, hw);
    im2col(xi, in_c_, s.h, s.w, k_, col.data());
    CMapRM cmat(col.data(), kk, hw);
    gkmat.noalias() += gmat * cmat.transpose();
    // fixed-order accumulation: Eigen's vectorized sum() reorders terms
    // based on pointer alignment, which breaks bit reproducibility
    for (int o = 0; o < out_c_; ++o) {
      const float* gr =
          grad_out.data() + (static_cast<std::size_t>(n) * out_c_ + o) * hw;
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += gr[i];
      grad_bias[o] += static_cast<float>(acc);
    }
    MapRM gcmat(gcol.data(), kk, hw);
    gcmat.noalias() = kmat.transpose() * gmat;
    col2im(gcol.data(), in_c_, s.h, s.w, k_,
           grad_in.data() + static_cast<std::size_t>(n) * in_c_ * hw);
  }
  return grad_in;
}

void ConvLayer::he_init(Rng& rng) {
  const float std = std::sqrt(2.0f / static_cast<float>(in_c_ * k_ * k_));
  kernels = rng_normal(rng, kernels.shape(), 0.0f, std);
  std::fill(bias.begin(), bias.end(), 0.0f);
}

void ConvLayer::zero_grad() {
  grad_kernels.fill(0.0f);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0f);
}

PreluLayer::PreluLayer(std::string name, int channels, float init_alpha)
    : alpha(channels, init_alpha),
      grad_alpha(channels, 0.0f),
      name_(std::move(name)) {
  if (channels < 1) throw ParamError("PreluLayer: channels >= 1 required");
}

Tensor PreluLayer::forward(const Tensor& x) const {
  const Shape s = x.shape();
  if (s.c != channels())
    throw ShapeError("prelu '" + name_ + "': channel count mismatch");
  Tensor out(s);
  const int hw = s.h * s.w;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float a = alpha[c];
      const float* src = x.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      float* dst = out.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      for (int i = 0; i < hw; ++i)
        dst[i] = src[i] >= 0.0f ? src[i] : a * src[i];
    }
  }
  return out;
}

Tensor PreluLayer::backward(const Tensor& x, const Tensor& grad_out) {
  const Shape s = x.shape();
  if (!(s == grad_out.shape()) || s.c != channels())
    throw ShapeError("prelu '" + name_ + "': shape mismatch in backward");
  Tensor grad_in(s);
  const int hw = s.h * s.w;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float a = alpha[c];
      double ga = 0.0;
      const float* xs = x.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      const float* gs =
          grad_out.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      float* gi = grad_in.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      for (int i = 0; i < hw; ++i) {
        if (xs[i] >= 0.0f) {
          gi[i] = gs[i];
        } else {
          gi[i] = a * gs[i];
          ga += static_cast<double>(gs[i]) * xs[i];
        }
      }
      grad_alpha[c] += static_cast<float>(ga);
    }
  }
  return grad_in;
}

void PreluLayer::zero_grad() {
  std::fill(grad_alpha.begin(), grad_alpha.end(), 0.0f);
}

Tensor concat_forward(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ShapeError("concat: batch/spatial dims must agree");
  Tensor out(sa.n, sa.c + sb.c, sa.h, sa.w);
  const std::size_t hw = static_cast<std::size_t>(sa.h) * sa.w;
  for (int n = 0; n < sa.n; ++n) {
    std::memcpy(out.data() + (static_cast<std::size_t>(n) * (sa.c + sb.c)) * hw,
                a.data() + static_cast<std::size_t>(n) * sa.c * hw,
                sizeof(float) * sa.c * hw);
    std::memcpy(out.data() +
                    (static_cast<std::size_t>(n) * (sa.c + sb.c) + sa.c) * hw,
                b.data() + static_cast<std::size_t>(n) * sb.c * hw,
                sizeof(float) * sb.c * hw);
  }
  return out;
}

std::pair<Tensor, Tensor> concat_backward(const Tensor& grad_out, int c_a,
                                          int c_b) {
  const Shape s = grad_out.shape();
  if (s.c != c_a + c_b)
    throw ShapeError("concat backward: channel split does not match input");
  Tensor ga(s.n, c_a, s.h, s.w);
  Tensor gb(s.n, c_b, s.h, s.w);
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n) {
    std::memcpy(ga.data() + static_cast<std::size_t>(n) * c_a * hw,
                grad_out.data() + static_cast<std::size_t>(n) * s.c * hw,
                sizeof(float) * c_a * hw);
    std::memcpy(gb.data() + static_cast<std::size_t>(n) * c_b * hw,
                grad_out.data() + (static_cast<std::size_t>(n) * s.c + c_a) * hw,
                sizeof(float) * c_b * hw);
  }
  return {std::move(ga), std::move(gb)};
}

}  // namespace decnn
