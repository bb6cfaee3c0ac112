#pragma once

#include <cstdint>
#include <vector>

#include "decnn/tensor.hpp"
#include "decnn/volume.hpp"

namespace decnn {

// Procedural cross-modality phantom. The source modality shows bone and
// air at nearly the same (low) intensity while the target modality shows
// bone bright and air dark, so a pointwise intensity map cannot solve the
// synthesis; surrounding geometry has to be used.
struct PhantomSpec {
  int d = 40, h = 96, w = 96;
  int bone_shells = 3;
  int air_cavities = 3;
  int tissue_blobs = 4;
  float shell_radius_min = 8.0f, shell_radius_max = 14.0f;
  float shell_thickness = 0.22f;  // fraction of the shell radius
  float cavity_radius_min = 5.0f, cavity_radius_max = 9.0f;
  float blob_radius_min = 8.0f, blob_radius_max = 16.0f;
  float noise_amp = 0.08f;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Region : std::uint8_t { kSoftTissue = 0, kBone = 1, kAir = 2 };

struct PhantomPair {
  Volume src;
  Volume tgt;
  std::vector<std::uint8_t> labels;  // Region per voxel, slice-major
};

PhantomPair phantom_generate(const PhantomSpec& spec);

}  // namespace decnn
