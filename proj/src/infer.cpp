#include "decnn/infer.hpp"

#include "decnn/metrics.hpp"

namespace decnn {

std::vector<int> coverage_counts(int d, int slices) {
  if (d < slices)
    throw GeometryError("coverage: volume depth smaller than slice window");
  std::vector<int> counts(d, 0);
  for (int z = 0; z <= d - slices; ++z)
    for (int s = 0; s < slices; ++s) ++counts[z + s];
  return counts;
}

Volume synthesize(const DecnnModel& model, const Volume& src, int slices) {
  if (model.config().in_slices != slices)
    throw ConfigError("synthesize: model expects " +
                      std::to_string(model.config().in_slices) +
                      " slices, got --slices " + std::to_string(slices));
  if (src.d < slices)
    throw GeometryError("synthesize: volume depth " + std::to_string(src.d) +
                        " smaller than slice window " + std::to_string(slices));

  Volume sum(src.d, src.h, src.w, 0.0f);
  const std::size_t plane = static_cast<std::size_t>(src.h) * src.w;
  Tensor window(1, slices, src.h, src.w);
  for (int z = 0; z <= src.d - slices; ++z) {
    for (int s = 0; s < slices; ++s)
      std::copy_n(src.data.data() + (static_cast<std::size_t>(z + s)) * plane,
                  plane, window.data() + static_cast<std::size_t>(s) * plane);
    const Tensor out = model.predict(window);
    for (int s = 0; s < slices; ++s) {
      const float* op = out.data() + static_cast<std::size_t>(s) * plane;
      float* sp = sum.data.data() + (static_cast<std::size_t>(z + s)) * plane;
      for (std::size_t i = 0; i < plane; ++i) sp[i] += op[i];
    }
  }
  const std::vector<int> counts = coverage_counts(src.d, slices);
  for (int z = 0; z < src.d; ++z) {
    const float inv = 1.0f / static_cast<float>(counts[z]);
    float* sp = sum.data.data() + static_cast<std::size_t>(z) * plane;
    for (std::size_t i = 0; i < plane; ++i) sp[i] *= inv;
  }
  sum.spacing = src.spacing;
  sum.norm = src.norm;
  return sum;
}

EvalResult synthesize_metrics(const DecnnModel& model, const Volume& src,
                              const Volume& tgt, int slices) {
  if (src.d != tgt.d || src.h != tgt.h || src.w != tgt.w)
    throw ShapeError("synthesize_metrics: source/target dims differ");
  Volume pred = synthesize(model, src, slices);
  const Volume pred_hu = pred.norm ? denormalize(pred) : pred;
  const Volume tgt_hu = tgt.norm ? denormalize(tgt) : tgt;
  EvalResult r;
  r.mae_hu = metrics::mae(pred_hu, tgt_hu);
  const std::optional<double> p = metrics::psnr(pred_hu, tgt_hu);
  if (p) {
    r.psnr_db = *p;
  } else {
    r.psnr_infinite = true;
  }
  return r;
}

}  // namespace decnn
