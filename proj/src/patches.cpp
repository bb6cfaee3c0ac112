#include "decnn/patches.hpp"

#include <numeric>

namespace decnn {

std::vector<int> grid_positions(int extent, int patch, int stride) {
  if (extent < patch)
    throw GeometryError("patch grid: extent " + std::to_string(extent) +
                        " smaller than patch " + std::to_string(patch));
  const int last = extent - patch;
  std::vector<int> pos;
  for (int p = 0; p <= last; p += stride) pos.push_back(p);
  // fold the flush-edge origin into the final slot when the previous
  // position still covers the gap; otherwise it has to be appended
  if (pos.back() != last) {
    if (pos.size() >= 2 && last - pos[pos.size() - 2] <= patch)
      pos.back() = last;
    else
      pos.push_back(last);
  }
  return pos;
}

std::vector<PatchOrigin> patch_grid(int d, int h, int w, int patch, int stride,
                                    int slices) {
  if (d < slices)
    throw GeometryError("patch grid: depth " + std::to_string(d) +
                        " smaller than slice window " + std::to_string(slices));
  const std::vector<int> ys = grid_positions(h, patch, stride);
  const std::vector<int> xs = grid_positions(w, patch, stride);
  std::vector<PatchOrigin> out;
  out.reserve(static_cast<std::size_t>(d - slices + 1) * ys.size() * xs.size());
  for (int z = 0; z <= d - slices; ++z)
    for (int y : ys)
      for (int x : xs) out.push_back({0, z, y, x, false});
  return out;
}

PatchPair extract_patch(const Volume& src, const Volume& tgt,
                        const PatchOrigin& origin, int patch, int slices) {
  if (src.d != tgt.d || src.h != tgt.h || src.w != tgt.w)
    throw ShapeError("extract_patch: source/target dims differ");
  if (origin.z < 0 || origin.z + slices > src.d || origin.y < 0 ||
      origin.y + patch > src.h || origin.x < 0 || origin.x + patch > src.w)
    throw GeometryError("extract_patch: origin out of bounds");

  PatchPair pair;
  pair.origin = origin;
  pair.source = Tensor(1, slices, patch, patch);
  pair.target = Tensor(1, slices, patch, patch);
  for (int s = 0; s < slices; ++s)
    for (int y = 0; y < patch; ++y)
      for (int x = 0; x < patch; ++x) {
        pair.source.at(0, s, y, x) =
            src.at(origin.z + s, origin.y + y, origin.x + x);
        pair.target.at(0, s, y, x) =
            tgt.at(origin.z + s, origin.y + y, origin.x + x);
      }
  if (origin.flipped) {
    pair.origin.flipped = false;
    pair = augment_flip(pair);
  }
  return pair;
}

PatchPair augment_flip(const PatchPair& pair) {
  const Shape s = pair.source.shape();
  PatchPair out;
  out.origin = pair.origin;
  out.origin.flipped = !pair.origin.flipped;
  out.source = Tensor(s);
  out.target = Tensor(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          out.source.at(n, c, y, x) = pair.source.at(n, c, y, s.w - 1 - x);
          out.target.at(n, c, y, x) = pair.target.at(n, c, y, s.w - 1 - x);
        }
  return out;
}

BatchIter::BatchIter(std::size_t count, int batch, std::uint64_t seed)
    : count_(count), batch_(batch), seed_(seed) {
  if (count == 0) throw DataError("batch iterator: empty pair list");
  if (batch < 1) throw DataError("batch iterator: batch size must be >= 1");
}

std::vector<std::vector<std::size_t>> BatchIter::epoch_batches(int epoch) {
  std::vector<std::size_t> order(count_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // per-epoch stream so resumed runs shuffle identically
  Rng rng(seed_ ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
  for (std::size_t i = count_ - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(order[i], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t off = 0; off < count_; off += batch_) {
    const std::size_t end = std::min(count_, off + batch_);
    batches.emplace_back(order.begin() + off, order.begin() + end);
  }
  return batches;
}

}  // namespace decnn
