#pragma once

#include <vector>

#include "decnn/model.hpp"
#include "decnn/volume.hpp"

namespace decnn {

// Per-slice coverage counts for a stride-1 window pass: how many windows
// predict each axial slice.
std::vector<int> coverage_counts(int d, int slices);

// Quasi-3D synthesis: every window of `slices` consecutive axial planes is
// forwarded through the model; overlapping per-slice predictions are
// averaged by coverage count. `src` is expected to be normalized; its
// NormRecord is carried over to the result.
Volume synthesize(const DecnnModel& model, const Volume& src, int slices);

struct EvalResult {
  double mae_hu = 0.0;   // after denormalization
  double psnr_db = 0.0;  // infinite when the volumes are identical
  bool psnr_infinite = false;
};

EvalResult synthesize_metrics(const DecnnModel& model, const Volume& src,
                              const Volume& tgt, int slices);

}  // namespace decnn
