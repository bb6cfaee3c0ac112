#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "decnn/errors.hpp"

namespace decnn {

// Original intensity range, kept so normalization can be reversed.
struct NormRecord {
  float vmin = 0.0f;
  float vmax = 1.0f;
};

// Rank-3 scalar field, slice-major (z, then y, then x), float32.
struct Volume {
  int d = 0, h = 0, w = 0;
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};
  std::vector<float> data;
  std::optional<NormRecord> norm;

  Volume() = default;
  Volume(int d, int h, int w, float fill = 0.0f)
      : d(d), h(h), w(w), data(static_cast<std::size_t>(d) * h * w, fill) {}

  float& at(int z, int y, int x) {
    return data[(static_cast<std::size_t>(z) * h + y) * w + x];
  }
  float at(int z, int y, int x) const {
    return data[(static_cast<std::size_t>(z) * h + y) * w + x];
  }
  std::size_t size() const { return data.size(); }
};

// "RVF1" container: magic, version, dims, spacing, optional NormRecord,
// then raw little-endian float32 voxels. Lossless and bit-exact.
Volume volume_read(const std::string& path);
void volume_write(const std::string& path, const Volume& v);

// Linear map of [vmin, vmax] onto [0, 1]; the range is recorded on the
// result so denormalize can invert it exactly.
Volume normalize(const Volume& v);
Volume denormalize(const Volume& v);

}  // namespace decnn
