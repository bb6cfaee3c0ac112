#pragma once

#include <cstdint>
#include <vector>

#include "decnn/tensor.hpp"
#include "decnn/volume.hpp"

namespace decnn {

struct PatchOrigin {
  int volume = 0;  // index into the caller's volume list
  int z = 0;       // first axial slice of the window
  int y = 0;
  int x = 0;
  bool flipped = false;

  bool operator==(const PatchOrigin&) const = default;
};

// Aligned source/target patch stacks: (1, slices, patch, patch) each.
struct PatchPair {
  Tensor source;
  Tensor target;
  PatchOrigin origin;
};

// In-plane origins at multiples of `stride`; when the last stride position
// does not reach the far edge, the final origin is moved flush with it so
// every pixel is covered. Axial windows run at stride 1. Ordering is
// (z, y, x), deterministic.
std::vector<PatchOrigin> patch_grid(int d, int h, int w, int patch, int stride,
                                    int slices);

// Positions along one axis under the rule above.
std::vector<int> grid_positions(int extent, int patch, int stride);

PatchPair extract_patch(const Volume& src, const Volume& tgt,
                        const PatchOrigin& origin, int patch, int slices);

// Joint left-right flip of source and target (width axis reversed).
PatchPair augment_flip(const PatchPair& pair);

// Seeded epoch shuffling over a fixed origin list; emits index batches of
// `batch` (last one may be short). Each epoch is a fresh permutation.
class BatchIter {
 public:
  BatchIter(std::size_t count, int batch, std::uint64_t seed);

  // Permutation for the given epoch, chunked into batches.
  std::vector<std::vector<std::size_t>> epoch_batches(int epoch);

 private:
  std::size_t count_;
  int batch_;
  std::uint64_t seed_;
};

}  // namespace decnn
