#include "decnn/checkpoint.hpp"

#include <cstdio>
#include <cstring>

namespace decnn {

namespace {

constexpr char kMagic[4] = {'D', 'E', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put(std::FILE* f, const void* p, std::size_t len, const std::string& path) {
  if (std::fwrite(p, 1, len, f) != len)
    throw IoError("failed writing checkpoint " + path);
}

void get(std::FILE* f, void* p, std::size_t len, const std::string& what) {
  if (std::fread(p, 1, len, f) != len)
    throw FormatError("DECK: truncated while reading " + what);
}

template <typename T>
void put_v(std::FILE* f, T v, const std::string& path) {
  put(f, &v, sizeof(T), path);
}

template <typename T>
T get_v(std::FILE* f, const std::string& what) {
  T v;
  get(f, &v, sizeof(T), what);
  return v;
}

}  // namespace

void Checkpoint::save(const std::string& path, DecnnModel& model,
                      std::uint64_t train_step, int epochs_done,
                      Adam* optimizer) {
  const std::string tmp = path + ".tmp";
  {
    FilePtr f(std::fopen(tmp.c_str(), "wb"));
    if (!f) throw IoError("cannot create checkpoint " + path);
    put(f.get(), kMagic, 4, path);
    put_v<std::uint32_t>(f.get(), kVersion, path);
    const ModelConfig& c = model.config();
    put_v<std::int32_t>(f.get(), c.k, path);
    put_v<std::int32_t>(f.get(), c.channels, path);
    put_v<std::int32_t>(f.get(), c.in_slices, path);
    put_v<std::int32_t>(f.get(), c.pre_layers, path);
    put_v<std::int32_t>(f.get(), c.kernel, path);
    put_v<std::uint64_t>(f.get(), train_step, path);
    put_v<std::int32_t>(f.get(), epochs_done, path);
    put_v<std::uint8_t>(f.get(), optimizer ? 1u : 0u, path);

    std::vector<ParamRef> params = model.params();
    put_v<std::uint32_t>(f.get(), static_cast<std::uint32_t>(params.size()),
                         path);
    for (const ParamRef& p : params) {
      put_v<std::uint32_t>(f.get(), static_cast<std::uint32_t>(p.name.size()),
                           path);
      put(f.get(), p.name.data(), p.name.size(), path);
      put_v<std::uint64_t>(f.get(), p.size, path);
      put(f.get(), p.data, sizeof(float) * p.size, path);
    }
    if (optimizer) {
      put_v<double>(f.get(), optimizer->lr(), path);
      put_v<double>(f.get(), optimizer->beta1(), path);
      put_v<double>(f.get(), optimizer->beta2(), path);
      put_v<double>(f.get(), optimizer->eps(), path);
      put_v<std::uint64_t>(f.get(), optimizer->step_count(), path);
      for (std::size_t i = 0; i < params.size(); ++i) {
        put(f.get(), optimizer->moments_m()[i].data(),
            sizeof(float) * params[i].size, path);
        put(f.get(), optimizer->moments_v()[i].data(),
            sizeof(float) * params[i].size, path);
      }
    }
    if (std::fflush(f.get()) != 0) throw IoError("failed flushing " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move checkpoint into place: " + path);
}

Checkpoint::Loaded Checkpoint::load(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open checkpoint " + path);
  char magic[4];
  get(f.get(), magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("DECK: bad magic in " + path);
  const auto version = get_v<std::uint32_t>(f.get(), "version");
  if (version != kVersion)
    throw FormatError("DECK: unsupported version " + std::to_string(version));

  Loaded out;
  out.config.k = get_v<std::int32_t>(f.get(), "config.k");
  out.config.channels = get_v<std::int32_t>(f.get(), "config.channels");
  out.config.in_slices = get_v<std::int32_t>(f.get(), "config.in_slices");
  out.config.pre_layers = get_v<std::int32_t>(f.get(), "config.pre_layers");
  out.config.kernel = get_v<std::int32_t>(f.get(), "config.kernel");
  out.config.validate();
  out.train_step = get_v<std::uint64_t>(f.get(), "train_step");
  out.epochs_done = get_v<std::int32_t>(f.get(), "epochs_done");
  out.has_optimizer = get_v<std::uint8_t>(f.get(), "flags") & 1u;

  Rng dummy(0);
  out.model = std::make_unique<DecnnModel>(out.config, dummy);
  std::vector<ParamRef> params = out.model->params();
  const auto count = get_v<std::uint32_t>(f.get(), "param count");
  if (count != params.size())
    throw FormatError("DECK: parameter count mismatch (file has " +
                      std::to_string(count) + ", model expects " +
                      std::to_string(params.size()) + ")");
  for (ParamRef& p : params) {
    const auto nlen = get_v<std::uint32_t>(f.get(), "param name length");
    std::string name(nlen, '\0');
    get(f.get(), name.data(), nlen, "param name");
    if (name != p.name)
      throw FormatError("DECK: parameter order mismatch: file has '" + name +
                        "', expected '" + p.name + "'");
    const auto size = get_v<std::uint64_t>(f.get(), "param size");
    if (size != p.size)
      throw FormatError("DECK: parameter '" + name + "' size mismatch");
    get(f.get(), p.data, sizeof(float) * p.size, "param data");
  }
  if (out.has_optimizer) {
    out.lr = get_v<double>(f.get(), "adam lr");
    out.beta1 = get_v<double>(f.get(), "adam beta1");
    out.beta2 = get_v<double>(f.get(), "adam beta2");
    out.eps = get_v<double>(f.get(), "adam eps");
    out.train_step = get_v<std::uint64_t>(f.get(), "adam step");
    for (const ParamRef& p : params) {
      std::vector<float> m(p.size), v(p.size);
      get(f.get(), m.data(), sizeof(float) * p.size, "adam m");
      get(f.get(), v.data(), sizeof(float) * p.size, "adam v");
      out.m.push_back(std::move(m));
      out.v.push_back(std::move(v));
    }
  }
  return out;
}

void restore_adam(Adam& adam, const Checkpoint::Loaded& loaded) {
  if (!loaded.has_optimizer)
    throw StateError("checkpoint carries no optimizer state");
  if (adam.moments_m().size() != loaded.m.size())
    throw StateError("optimizer state size mismatch");
  adam.moments_m() = loaded.m;
  adam.moments_v() = loaded.v;
  adam.set_step_count(loaded.train_step);
}

}  // namespace decnn
