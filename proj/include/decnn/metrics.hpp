#pragma once

#include <optional>
#include <vector>

#include "decnn/tensor.hpp"
#include "decnn/volume.hpp"

namespace decnn {
namespace metrics {

// Lightweight 2-D image used by the similarity routines.
struct Image {
  int h = 0, w = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : h(h), w(w), data(static_cast<std::size_t>(h) * w, fill) {}
  float& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
  float at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * w + x];
  }
};

// Mean absolute voxel error.
double mae(const Volume& pred, const Volume& truth);

// Peak signal-to-noise ratio in dB: 10*log10(N*Q^2 / sum of squared error),
// Q = max intensity over both volumes. nullopt signals infinite PSNR
// (identical inputs). Q == 0 is a degenerate-input error.
std::optional<double> psnr(const Volume& pred, const Volume& truth);

// Gradient-magnitude map (central differences, one-sided at borders).
Image gradient_magnitude(const Image& a);

// Shannon entropy in nats of a `bins`-level histogram over [min, max] of
// the image's own range. Constant images have entropy 0.
double entropy(const Image& a, int bins);

// Structural mutual information: mutual information between the
// gradient-weighted images A.*G(A) and B.*G(B), estimated from `bins`-level
// histograms with per-image edges. Entropies in nats.
double smi(const Image& a, const Image& b, int bins);

struct RankedChannel {
  int channel;
  double smi;
};

// SMI of every channel of `maps` against `reference`, sorted descending
// (ties broken by channel index).
std::vector<RankedChannel> rank_feature_maps(const Tensor& maps,
                                             const Image& reference, int bins);

}  // namespace metrics
}  // namespace decnn
