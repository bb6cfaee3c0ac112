#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "decnn/checkpoint.hpp"
#include "decnn/phantom.hpp"
#include "decnn/train.hpp"
#include "test_util.hpp"

using decnn::Checkpoint;
using decnn::DecnnModel;
using decnn::ModelConfig;
using decnn::Rng;
using decnn::Tensor;
using decnn::TrainConfig;

namespace {

std::filesystem::path temp_dir() {
  auto p = std::filesystem::temp_directory_path() / "decnn_ckpt_tests";
  std::filesystem::create_directories(p);
  return p;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

// drop the wall_seconds column (timing is the one nondeterministic field)
std::string strip_wall(const std::string& row) {
  const auto pos = row.rfind(',');
  return row.substr(0, pos);
}

std::vector<decnn::VolumePair> phantom_set(int count, std::uint64_t seed0) {
  std::vector<decnn::VolumePair> out;
  for (int i = 0; i < count; ++i) {
    decnn::PhantomSpec spec;
    spec.d = 6;
    spec.h = 48;
    spec.w = 48;
    spec.seed = seed0 + i;
    decnn::PhantomPair p = decnn::phantom_generate(spec);
    out.push_back({std::move(p.src), std::move(p.tgt)});
  }
  return out;
}

TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.model.k = 1;
  cfg.model.channels = 4;
  cfg.model.pre_layers = 2;
  cfg.batch = 8;
  cfg.patch = 32;
  cfg.stride = 16;
  cfg.epochs = 2;
  cfg.lr = 1e-3;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("DECK round trip preserves forward outputs bit-exactly") {
  const auto dir = temp_dir();
  ModelConfig cfg;
  cfg.k = 2;
  cfg.channels = 5;
  Rng rng(1);
  DecnnModel m(cfg, rng);
  const std::string path = (dir / "model.deck").string();
  Checkpoint::save(path, m, 42, 3, nullptr);

  Checkpoint::Loaded loaded = Checkpoint::load(path);
  CHECK(loaded.config == cfg);
  CHECK(loaded.train_step == 42);
  CHECK(loaded.epochs_done == 3);
  CHECK(!loaded.has_optimizer);

  Rng xr(2);
  const Tensor x = testutil::random_tensor(xr, {1, 3, 9, 9}, 0.5f);
  const Tensor a = m.predict(x);
  const Tensor b = loaded.model->predict(x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("DECK detects corruption") {
  const auto dir = temp_dir();
  ModelConfig cfg;
  cfg.k = 0;
  cfg.channels = 3;
  Rng rng(3);
  DecnnModel m(cfg, rng);
  const std::string path = (dir / "corrupt.deck").string();
  Checkpoint::save(path, m, 0, 0, nullptr);

  std::filesystem::resize_file(path,
                               std::filesystem::file_size(path) / 2);
  CHECK_THROWS_AS(Checkpoint::load(path), decnn::FormatError);

  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "XXXXjunk";
  }
  CHECK_THROWS_AS(Checkpoint::load(path), decnn::FormatError);
  CHECK_THROWS_AS(Checkpoint::load((dir / "missing.deck").string()),
                  decnn::IoError);
}

TEST_CASE("config file parsing and key application") {
  const auto dir = temp_dir();
  const std::string path = (dir / "cfg.txt").string();
  {
    std::ofstream f(path);
    f << "# comment line\n"
      << "k = 3\n"
      << "channels=16   # trailing comment\n"
      << "lr = 2e-4\n"
      << "flip = false\n"
      << "\n";
  }
  TrainConfig cfg;
  for (const auto& [k, v] : decnn::parse_config_file(path)) cfg.apply(k, v);
  CHECK(cfg.model.k == 3);
  CHECK(cfg.model.channels == 16);
  CHECK(cfg.lr == 2e-4);
  CHECK(!cfg.flip);
  // defaults untouched
  CHECK(cfg.batch == 16);
  CHECK(cfg.stride == 8);
  CHECK(cfg.beta == 0.5);
  CHECK(cfg.alpha == 0.001);
  CHECK(cfg.beta1 == 0.9);
  CHECK(cfg.lr != 1e-5);  // overridden above; default is 1e-5

  CHECK_THROWS_AS(cfg.apply("bogus", "1"), decnn::ConfigError);
  CHECK_THROWS_AS(cfg.apply("k", "abc"), decnn::ConfigError);
  {
    std::ofstream f(path);
    f << "no equals sign here\n";
  }
  CHECK_THROWS_AS(decnn::parse_config_file(path), decnn::ConfigError);
}

TEST_CASE("train: epochs=0 leaves the initialization checkpoint") {
  const auto dir = temp_dir();
  TrainConfig cfg = small_train_config();
  cfg.epochs = 0;
  auto vols = phantom_set(1, 100);
  const std::string ckpt = (dir / "e0.deck").string();
  const std::string csv = (dir / "e0.csv").string();
  decnn::TrainResult r = decnn::train(cfg, vols, {}, ckpt, csv);
  CHECK(r.epochs_run == 0);

  const auto lines = read_lines(csv);
  REQUIRE(lines.size() == 1);
  CHECK(lines[0] == decnn::kTrainCsvHeader);

  // checkpoint equals a fresh initialization from the same seed
  Checkpoint::Loaded loaded = Checkpoint::load(ckpt);
  Rng rng(cfg.seed);
  DecnnModel fresh(cfg.model, rng);
  Rng xr(1);
  const Tensor x = testutil::random_tensor(xr, {1, 3, 8, 8}, 0.5f);
  const Tensor a = fresh.predict(x);
  const Tensor b = loaded.model->predict(x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("train: deterministic rerun, loss decreases") {
  const auto dir = temp_dir();
  TrainConfig cfg = small_train_config();
  auto vols = phantom_set(2, 200);

  const std::string c1 = (dir / "d1.deck").string();
  const std::string v1 = (dir / "d1.csv").string();
  decnn::TrainResult r1 = decnn::train(cfg, vols, {}, c1, v1);
  const std::string c2 = (dir / "d2.deck").string();
  const std::string v2 = (dir / "d2.csv").string();
  decnn::TrainResult r2 = decnn::train(cfg, vols, {}, c2, v2);

  const auto l1 = read_lines(v1);
  const auto l2 = read_lines(v2);
  REQUIRE(l1.size() == l2.size());
  for (std::size_t i = 0; i < l1.size(); ++i)
    CHECK(strip_wall(l1[i]) == strip_wall(l2[i]));

  REQUIRE(r1.rows.size() == 2);
  CHECK(r1.rows[1].train_loss < r1.rows[0].train_loss);

  // bit-identical parameters
  Checkpoint::Loaded a = Checkpoint::load(c1);
  Checkpoint::Loaded b = Checkpoint::load(c2);
  auto pa = a.model->params();
  auto pb = b.model->params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pa[i].size; ++j)
      CHECK(pa[i].data[j] == pb[i].data[j]);
}

TEST_CASE("train: resume matches the uninterrupted run") {
  const auto dir = temp_dir();
  auto vols = phantom_set(2, 300);
  auto val = phantom_set(1, 400);

  TrainConfig full = small_train_config();
  full.epochs = 3;
  const std::string cf = (dir / "full.deck").string();
  const std::string vf = (dir / "full.csv").string();
  decnn::train(full, vols, val, cf, vf);

  // run 1 epoch, then resume for the remaining 2
  TrainConfig part = full;
  part.epochs = 1;
  const std::string cp = (dir / "part.deck").string();
  const std::string vp = (dir / "part.csv").string();
  decnn::train(part, vols, val, cp, vp);
  part.epochs = 3;
  decnn::train(part, vols, val, cp, vp, /*resume=*/true);

  const auto lf = read_lines(vf);
  const auto lp = read_lines(vp);
  REQUIRE(lf.size() == lp.size());
  for (std::size_t i = 0; i < lf.size(); ++i)
    CHECK(strip_wall(lf[i]) == strip_wall(lp[i]));

  Checkpoint::Loaded a = Checkpoint::load(cf);
  Checkpoint::Loaded b = Checkpoint::load(cp);
  auto pa = a.model->params();
  auto pb = b.model->params();
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pa[i].size; ++j)
      CHECK(pa[i].data[j] == pb[i].data[j]);
}

TEST_CASE("train: resume rejects a mismatched config") {
  const auto dir = temp_dir();
  auto vols = phantom_set(1, 500);
  TrainConfig cfg = small_train_config();
  cfg.epochs = 1;
  const std::string ckpt = (dir / "mm.deck").string();
  decnn::train(cfg, vols, {}, ckpt, (dir / "mm.csv").string());
  cfg.model.channels += 1;
  cfg.epochs = 2;
  CHECK_THROWS_AS(decnn::train(cfg, vols, {}, ckpt, (dir / "mm.csv").string(),
                               /*resume=*/true),
                  decnn::ConfigError);
}

TEST_CASE("train: empty volume list is a data error") {
  TrainConfig cfg = small_train_config();
  CHECK_THROWS_AS(decnn::train(cfg, {}, {}, "x.deck", "x.csv"),
                  decnn::DataError);
}
