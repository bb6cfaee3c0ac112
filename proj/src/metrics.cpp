#include "decnn/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace decnn {
namespace metrics {

namespace {

void check_dims(const Volume& a, const Volume& b, const char* op) {
  if (a.d != b.d || a.h != b.h || a.w != b.w)
    throw ShapeError(std::string(op) + ": volume dims differ");
}

// bin index over [lo, hi]; top edge maps into the last bin
int bin_of(float v, float lo, float hi, int bins) {
  if (hi <= lo) return 0;
  int b = static_cast<int>((v - lo) / (hi - lo) * bins);
  return std::clamp(b, 0, bins - 1);
}

std::pair<float, float> value_range(const Image& a) {
  float lo = a.data[0], hi = a.data[0];
  for (float v : a.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

double entropy_of_counts(const std::vector<double>& counts, double total) {
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return h;
}

Image gradient_weighted(const Image& a) {
  Image g = gradient_magnitude(a);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= a.data[i];
  return g;
}

}  // namespace

double mae(const Volume& pred, const Volume& truth) {
  check_dims(pred, truth, "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    acc += std::abs(static_cast<double>(pred.data[i]) - truth.data[i]);
  return acc / static_cast<double>(pred.data.size());
}

std::optional<double> psnr(const Volume& pred, const Volume& truth) {
  check_dims(pred, truth, "psnr");
  double q = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    q = std::max({q, static_cast<double>(pred.data[i]),
                  static_cast<double>(truth.data[i])});
    const double d = static_cast<double>(pred.data[i]) - truth.data[i];
    sq += d * d;
  }
  if (sq == 0.0) return std::nullopt;  // identical: infinite PSNR
  if (q <= 0.0) throw DataError("psnr: peak intensity Q is not positive");
  const double n = static_cast<double>(pred.data.size());
  return 10.0 * std::log10(n * q * q / sq);
}

Image gradient_magnitude(const Image& a) {
  Image g(a.h, a.w);
  for (int y = 0; y < a.h; ++y) {
    for (int x = 0; x < a.w; ++x) {
      float gy, gx;
      if (a.h == 1)
        gy = 0.0f;
      else if (y == 0)
        gy = a.at(1, x) - a.at(0, x);
      else if (y == a.h - 1)
        gy = a.at(y, x) - a.at(y - 1, x);
      else
        gy = 0.5f * (a.at(y + 1, x) - a.at(y - 1, x));
      if (a.w == 1)
        gx = 0.0f;
      else if (x == 0)
        gx = a.at(y, 1) - a.at(y, 0);
      else if (x == a.w - 1)
        gx = a.at(y, x) - a.at(y, x - 1);
      else
        gx = 0.5f * (a.at(y, x + 1) - a.at(y, x - 1));
      g.at(y, x) = std::sqrt(gy * gy + gx * gx);
    }
  }
  return g;
}

double entropy(const Image& a, int bins) {
  if (bins < 2) throw ParamError("entropy: bins must be >= 2");
  const auto [lo, hi] = value_range(a);
  if (hi <= lo) return 0.0;  // constant image
  std::vector<double> counts(bins, 0.0);
  for (float v : a.data) counts[bin_of(v, lo, hi, bins)] += 1.0;
  return entropy_of_counts(counts, static_cast<double>(a.data.size()));
}

double smi(const Image& a, const Image& b, int bins) {
  if (a.h != b.h || a.w != b.w) throw ShapeError("smi: image dims differ");
  if (bins < 2) throw ParamError("smi: bins must be >= 2");
  const Image ga = gradient_weighted(a);
  const Image gb = gradient_weighted(b);
  const auto [alo, ahi] = value_range(ga);
  const auto [blo, bhi] = value_range(gb);
  // joint histogram; marginals and joint share the same edges so
  // H(X) + H(X) - H(X,X) collapses exactly to H(X)
  std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
  std::vector<double> ma(bins, 0.0), mb(bins, 0.0);
  for (std::size_t i = 0; i < ga.data.size(); ++i) {
    const int ia = (ahi > alo) ? bin_of(ga.data[i], alo, ahi, bins) : 0;
    const int ib = (bhi > blo) ? bin_of(gb.data[i], blo, bhi, bins) : 0;
    joint[static_cast<std::size_t>(ia) * bins + ib] += 1.0;
    ma[ia] += 1.0;
    mb[ib] += 1.0;
  }
  const double total = static_cast<double>(ga.data.size());
  return entropy_of_counts(ma, total) + entropy_of_counts(mb, total) -
         entropy_of_counts(joint, total);
}

std::vector<RankedChannel> rank_feature_maps(const Tensor& maps,
                                             const Image& reference,
                                             int bins) {
  const Shape s = maps.shape();
  if (s.n != 1)
    throw ShapeError("rank_feature_maps: expected a single-sample tensor");
  if (s.h != reference.h || s.w != reference.w)
    throw ShapeError("rank_feature_maps: reference dims differ from maps");
  std::vector<RankedChannel> out;
  for (int c = 0; c < s.c; ++c) {
    Image img(s.h, s.w);
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) img.at(y, x) = maps.at(0, c, y, x);
    out.push_back({c, smi(img, reference, bins)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedChannel& l, const RankedChannel& r) {
                     return l.smi > r.smi;
                   });
  return out;
}

}  // namespace metrics
}  // namespace decnn
