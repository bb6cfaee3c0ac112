#include "decnn/volume.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>

namespace decnn {

namespace {

constexpr char kMagic[4] = {'R', 'V', 'F', '1'};
constexpr std::uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void read_exact(std::FILE* f, void* dst, std::size_t len, long offset,
                const std::string& what) {
  if (std::fread(dst, 1, len, f) != len)
    throw FormatError("RVF1: truncated while reading " + what +
                      " at byte offset " + std::to_string(offset));
}

void write_exact(std::FILE* f, const void* src, std::size_t len,
                 const std::string& path) {
  if (std::fwrite(src, 1, len, f) != len)
    throw IoError("failed writing " + path);
}

}  // namespace

Volume volume_read(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open volume file: " + path);

  char magic[4];
  read_exact(f.get(), magic, 4, 0, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("RVF1: bad magic at byte offset 0 in " + path);

  std::uint32_t version;
  read_exact(f.get(), &version, 4, 4, "version");
  if (version != kVersion)
    throw FormatError("RVF1: unsupported version " + std::to_string(version) +
                      " at byte offset 4");

  std::uint32_t dims[3];
  read_exact(f.get(), dims, 12, 8, "dims");
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
    throw FormatError("RVF1: zero dimension in header at byte offset 8");

  Volume v;
  v.d = static_cast<int>(dims[0]);
  v.h = static_cast<int>(dims[1]);
  v.w = static_cast<int>(dims[2]);
  read_exact(f.get(), v.spacing.data(), 12, 20, "spacing");
  if (v.spacing[0] <= 0 || v.spacing[1] <= 0 || v.spacing[2] <= 0)
    throw FormatError("RVF1: non-positive spacing at byte offset 20");

  std::uint8_t flags;
  read_exact(f.get(), &flags, 1, 32, "flags");
  long offset = 33;
  if (flags & 1u) {
    NormRecord n;
    read_exact(f.get(), &n.vmin, 4, offset, "norm vmin");
    read_exact(f.get(), &n.vmax, 4, offset + 4, "norm vmax");
    if (!(n.vmax > n.vmin))
      throw FormatError("RVF1: invalid norm record at byte offset " +
                        std::to_string(offset));
    v.norm = n;
    offset += 8;
  }

  const std::size_t count =
      static_cast<std::size_t>(v.d) * v.h * v.w;
  v.data.resize(count);
  const std::size_t got =
      std::fread(v.data.data(), sizeof(float), count, f.get());
  if (got != count)
    throw FormatError("RVF1: header claims " + std::to_string(count) +
                      " voxels but only " + std::to_string(got) +
                      " present (data starts at byte offset " +
                      std::to_string(offset) + ")");
  // trailing garbage is also a format violation
  char extra;
  if (std::fread(&extra, 1, 1, f.get()) == 1)
    throw FormatError("RVF1: trailing bytes after voxel data in " + path);
  return v;
}

void volume_write(const std::string& path, const Volume& v) {
  if (v.d < 1 || v.h < 1 || v.w < 1 ||
      v.data.size() != static_cast<std::size_t>(v.d) * v.h * v.w)
    throw ShapeError("volume_write: dims do not match data length");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot create volume file: " + path);

  write_exact(f.get(), kMagic, 4, path);
  write_exact(f.get(), &kVersion, 4, path);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(v.d),
                                 static_cast<std::uint32_t>(v.h),
                                 static_cast<std::uint32_t>(v.w)};
  write_exact(f.get(), dims, 12, path);
  write_exact(f.get(), v.spacing.data(), 12, path);
  const std::uint8_t flags = v.norm ? 1u : 0u;
  write_exact(f.get(), &flags, 1, path);
  if (v.norm) {
    write_exact(f.get(), &v.norm->vmin, 4, path);
    write_exact(f.get(), &v.norm->vmax, 4, path);
  }
  write_exact(f.get(), v.data.data(), sizeof(float) * v.data.size(), path);
  if (std::fflush(f.get()) != 0) throw IoError("failed flushing " + path);
}

Volume normalize(const Volume& v) {
  float vmin = std::numeric_limits<float>::infinity();
  float vmax = -std::numeric_limits<float>::infinity();
  for (float x : v.data) {
    vmin = std::min(vmin, x);
    vmax = std::max(vmax, x);
  }
  if (!(vmax > vmin))
    throw DataError("normalize: constant volume has a degenerate range");
  Volume out = v;
  const float scale = 1.0f / (vmax - vmin);
  for (float& x : out.data) x = (x - vmin) * scale;
  out.norm = NormRecord{vmin, vmax};
  return out;
}

Volume denormalize(const Volume& v) {
  if (!v.norm)
    throw DataError("denormalize: volume carries no normalization record");
  Volume out = v;
  const float vmin = v.norm->vmin;
  const float range = v.norm->vmax - v.norm->vmin;
  for (float& x : out.data) x = x * range + vmin;
  out.norm.reset();
  return out;
}

}  // namespace decnn
