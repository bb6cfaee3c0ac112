#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "decnn/checkpoint.hpp"
#include "decnn/volume.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("DECNN_CLI");
  REQUIRE_MESSAGE(p != nullptr, "DECNN_CLI env var must point to the binary");
  return p;
}

struct CmdResult {
  int exit_code;
  std::string output;
};

CmdResult run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " 2>&1";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 512> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path work_dir() {
  auto p = fs::temp_directory_path() / "decnn_cli_tests";
  fs::create_directories(p);
  return p;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string ca((std::istreambuf_iterator<char>(fa)),
                       std::istreambuf_iterator<char>());
  const std::string cb((std::istreambuf_iterator<char>(fb)),
                       std::istreambuf_iterator<char>());
  return !ca.empty() && ca == cb;
}

}  // namespace

TEST_CASE("phantom: writes readable volumes, deterministic, bad dims") {
  const auto dir = work_dir();
  const auto src = dir / "p_src.rvf";
  const auto tgt = dir / "p_tgt.rvf";
  const std::string flags = "phantom --dims 8x40x96 --seed 1 --out-src " +
                            src.string() + " --out-tgt " + tgt.string();
  CHECK(run(flags).exit_code == 0);
  const decnn::Volume v = decnn::volume_read(src.string());
  CHECK(v.d == 8);
  CHECK(v.h == 40);
  CHECK(v.w == 96);

  const auto src2 = dir / "p_src2.rvf";
  const auto tgt2 = dir / "p_tgt2.rvf";
  CHECK(run("phantom --dims 8x40x96 --seed 1 --out-src " + src2.string() +
            " --out-tgt " + tgt2.string())
            .exit_code == 0);
  CHECK(same_bytes(src, src2));
  CHECK(same_bytes(tgt, tgt2));

  const CmdResult bad = run("phantom --dims 4x8x8 --out-src " + src.string() +
                            " --out-tgt " + tgt.string());
  CHECK(bad.exit_code == 5);
  CHECK(bad.output.find("dims") != std::string::npos);

  CHECK(run("phantom --dims nonsense --out-src x --out-tgt y").exit_code == 5);
}

TEST_CASE("evaluate: identical volumes and missing files") {
  const auto dir = work_dir();
  const auto a = dir / "same.rvf";
  decnn::Volume v(2, 3, 3, 0.5f);
  v.at(0, 0, 0) = 1.0f;
  decnn::volume_write(a.string(), v);
  const CmdResult r = run("evaluate --pred " + a.string() + " --truth " +
                          a.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("mae,psnr") != std::string::npos);
  CHECK(r.output.find("0,inf") != std::string::npos);

  const CmdResult missing =
      run("evaluate --pred " + a.string() + " --truth /nonexistent.rvf");
  CHECK(missing.exit_code == 3);
  CHECK(missing.output.find("nonexistent") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);
  CHECK(run("synthesize").exit_code == 2);  // missing required flags
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("train + synthesize + evaluate end to end") {
  const auto dir = work_dir();
  const auto src = dir / "t_src.rvf", tgt = dir / "t_tgt.rvf";
  REQUIRE(run("phantom --dims 6x48x48 --seed 3 --out-src " + src.string() +
              " --out-tgt " + tgt.string())
              .exit_code == 0);

  // config file sets epochs=1; the flag must win with epochs=2
  const auto cfgfile = dir / "small.cfg";
  {
    std::ofstream f(cfgfile);
    f << "k = 1\nchannels = 4\npre_layers = 2\npatch = 32\nstride = 16\n"
      << "batch = 8\nlr = 1e-3\nepochs = 1\nseed = 9\n";
  }
  const auto ckpt = dir / "t.deck";
  const auto csv = dir / "t.csv";
  const CmdResult tr =
      run("train --config " + cfgfile.string() + " --epochs 2 --quiet" +
          " --train-src " + src.string() + " --train-tgt " + tgt.string() +
          " --val-src " + src.string() + " --val-tgt " + tgt.string() +
          " --checkpoint " + ckpt.string() + " --csv " + csv.string());
  REQUIRE_MESSAGE(tr.exit_code == 0, tr.output);

  {
    std::ifstream f(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(f, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);  // header + 2 epochs: flag beat config file
    CHECK(lines[0] ==
          "epoch,train_loss,train_final_l2,train_aux_l2,val_psnr,val_mae,"
          "wall_seconds");
  }

  const auto synth = dir / "t_synth.rvf";
  REQUIRE(run("synthesize --checkpoint " + ckpt.string() + " --input " +
              src.string() + " --output " + synth.string() + " --slices 3")
              .exit_code == 0);
  const decnn::Volume out = decnn::volume_read(synth.string());
  const decnn::Volume in = decnn::volume_read(src.string());
  CHECK(out.d == in.d);
  CHECK(out.h == in.h);
  CHECK(out.w == in.w);

  // model built for 3 slices refuses --slices 1
  CHECK(run("synthesize --checkpoint " + ckpt.string() + " --input " +
            src.string() + " --output " + synth.string() + " --slices 1")
            .exit_code == 5);

  const CmdResult ev =
      run("evaluate --pred " + synth.string() + " --truth " + tgt.string());
  CHECK(ev.exit_code == 0);

  // inspect: one PGM for --top 1 and a sorted SMI column
  const auto insp = dir / "inspect_out";
  fs::remove_all(insp);
  const CmdResult ir =
      run("inspect --checkpoint " + ckpt.string() + " --src " + src.string() +
          " --truth " + tgt.string() + " --layer pre.1 --top 1 --out-dir " +
          insp.string());
  REQUIRE_MESSAGE(ir.exit_code == 0, ir.output);
  int pgms = 0;
  for (const auto& e : fs::directory_iterator(insp))
    if (e.path().extension() == ".pgm") ++pgms;
  CHECK(pgms == 1);
  {
    std::ifstream f(insp / "smi.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "rank,channel,smi");
    double prev = 1e30;
    int rows = 0;
    while (std::getline(f, line)) {
      const double smi = std::stod(line.substr(line.rfind(',') + 1));
      CHECK(smi <= prev);
      prev = smi;
      ++rows;
    }
    CHECK(rows == 4);  // one per channel
  }

  // unknown layer name lists the valid ones
  const CmdResult badlayer =
      run("inspect --checkpoint " + ckpt.string() + " --src " + src.string() +
          " --truth " + tgt.string() + " --layer nope --out-dir " +
          insp.string());
  CHECK(badlayer.exit_code == 5);
  CHECK(badlayer.output.find("pre.0") != std::string::npos);
  CHECK(badlayer.output.find("recon") != std::string::npos);
}

TEST_CASE("ablate: row counts and rerun determinism") {
  const auto dir = work_dir();
  const auto src = dir / "a_src.rvf", tgt = dir / "a_tgt.rvf";
  REQUIRE(run("phantom --dims 5x40x40 --seed 4 --out-src " + src.string() +
              " --out-tgt " + tgt.string())
              .exit_code == 0);
  const auto csv = dir / "sweep.csv";
  const std::string common =
      " --channels 3 --pre_layers 2 --patch 32 --stride 16 --batch 8"
      " --epochs 1 --lr 1e-3 --train-src " + src.string() + " --train-tgt " +
      tgt.string() + " --val-src " + src.string() + " --val-tgt " +
      tgt.string() + " --workdir " + (dir / "sweep_runs").string();
  const CmdResult r = run("ablate --k-list 0 1 --plain-depths 5 --seeds 1 2" +
                          common + " --csv " + csv.string());
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  auto read_all = [&] {
    std::ifstream f(csv);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) lines.push_back(line);
    return lines;
  };
  const auto first = read_all();
  // header + 3 configurations x 2 seeds
  REQUIRE(first.size() == 7);
  CHECK(first[0] == "config,seed,transform_convs,final_val_psnr,final_val_mae");
  // ebd0/plain run with pre_layers 2: 2 transform convs; ebd1: 5; plain5: 5
  CHECK(first[1].find(",2,") != std::string::npos);

  REQUIRE(run("ablate --k-list 0 1 --plain-depths 5 --seeds 1 2" + common +
              " --csv " + csv.string())
              .exit_code == 0);
  CHECK(read_all() == first);
}

TEST_CASE("corrupt volume file gives the format exit code") {
  const auto dir = work_dir();
  const auto bad = dir / "bad.rvf";
  {
    std::ofstream f(bad, std::ios::binary);
    f << "not a volume at all";
  }
  CHECK(run("evaluate --pred " + bad.string() + " --truth " + bad.string())
            .exit_code == 4);
}
