#include "decnn/phantom.hpp"

#include <cmath>

namespace decnn {

namespace {

constexpr float kSrcSoft = 0.50f, kTgtSoft = 0.35f;
constexpr float kSrcBone = 0.10f, kTgtBone = 0.95f;
constexpr float kSrcAir = 0.05f, kTgtAir = 0.05f;

struct Ellipsoid {
  float cz, cy, cx;
  float rz, ry, rx;

  float rho(int z, int y, int x) const {
    const float dz = (z - cz) / rz;
    const float dy = (y - cy) / ry;
    const float dx = (x - cx) / rx;
    return std::sqrt(dz * dz + dy * dy + dx * dx);
  }
};

float uniform(Rng& rng, float lo, float hi) {
  return lo + (hi - lo) * static_cast<float>(rng.next_double());
}

Ellipsoid random_ellipsoid(Rng& rng, const PhantomSpec& s, float rmin,
                           float rmax) {
  Ellipsoid e;
  const float r = uniform(rng, rmin, rmax);
  e.ry = r;
  e.rx = uniform(rng, 0.8f, 1.2f) * r;
  e.rz = std::max(2.0f, 0.5f * r);  // flatter along z at phantom scale
  // keep the structure mostly inside the field of view
  e.cz = uniform(rng, e.rz, std::max(e.rz, s.d - 1 - e.rz));
  e.cy = uniform(rng, e.ry, std::max(e.ry, s.h - 1 - e.ry));
  e.cx = uniform(rng, e.rx, std::max(e.rx, s.w - 1 - e.rx));
  return e;
}

}  // namespace

void PhantomSpec::validate() const {
  if (d < 1 || h < 32 || w < 32)
    throw GeometryError(
        "phantom spec: dims too small (need in-plane >= 32x32, depth >= 1)");
  if (bone_shells < 0 || air_cavities < 0 || tissue_blobs < 0)
    throw GeometryError("phantom spec: structure counts must be >= 0");
  if (noise_amp < 0.0f)
    throw GeometryError("phantom spec: noise amplitude must be >= 0");
}

PhantomPair phantom_generate(const PhantomSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  PhantomPair out;
  out.src = Volume(spec.d, spec.h, spec.w, kSrcSoft);
  out.tgt = Volume(spec.d, spec.h, spec.w, kTgtSoft);
  out.labels.assign(out.src.size(),
                    static_cast<std::uint8_t>(Region::kSoftTissue));

  // smooth tissue texture, correlated between the modalities
  for (int b = 0; b < spec.tissue_blobs; ++b) {
    const Ellipsoid e =
        random_ellipsoid(rng, spec, spec.blob_radius_min, spec.blob_radius_max);
    const float amp = uniform(rng, -0.08f, 0.08f);
    for (int z = 0; z < spec.d; ++z)
      for (int y = 0; y < spec.h; ++y)
        for (int x = 0; x < spec.w; ++x) {
          const float rho = e.rho(z, y, x);
          if (rho >= 1.0f) continue;
          const float f = amp * (1.0f - rho) * (1.0f - rho);
          out.src.at(z, y, x) += f;
          out.tgt.at(z, y, x) += 0.75f * f;
        }
  }

  std::vector<Ellipsoid> cavities;
  for (int b = 0; b < spec.air_cavities; ++b)
    cavities.push_back(random_ellipsoid(rng, spec, spec.cavity_radius_min,
                                        spec.cavity_radius_max));
  std::vector<Ellipsoid> shells;
  for (int b = 0; b < spec.bone_shells; ++b)
    shells.push_back(random_ellipsoid(rng, spec, spec.shell_radius_min,
                                      spec.shell_radius_max));

  for (int z = 0; z < spec.d; ++z) {
    for (int y = 0; y < spec.h; ++y) {
      for (int x = 0; x < spec.w; ++x) {
        const std::size_t i =
            (static_cast<std::size_t>(z) * spec.h + y) * spec.w + x;
        for (const Ellipsoid& e : cavities) {
          if (e.rho(z, y, x) < 1.0f) {
            out.src.at(z, y, x) = kSrcAir;
            out.tgt.at(z, y, x) = kTgtAir;
            out.labels[i] = static_cast<std::uint8_t>(Region::kAir);
          }
        }
        // bone wins overlaps; the shell is a thin band around rho == 1
        for (const Ellipsoid& e : shells) {
          const float rho = e.rho(z, y, x);
          if (rho <= 1.0f && rho >= 1.0f - spec.shell_thickness) {
            out.src.at(z, y, x) = kSrcBone;
            out.tgt.at(z, y, x) = kTgtBone;
            out.labels[i] = static_cast<std::uint8_t>(Region::kBone);
          }
        }
      }
    }
  }

  // independent acquisition noise; the source modality is noisier, which
  // keeps the bone/air source distributions overlapping
  if (spec.noise_amp > 0.0f) {
    for (float& v : out.src.data)
      v += spec.noise_amp * static_cast<float>(rng.next_normal());
    for (float& v : out.tgt.data)
      v += 0.4f * spec.noise_amp * static_cast<float>(rng.next_normal());
  }
  return out;
}

}  // namespace decnn
