#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ktnext/cli.hpp"
#include "ktnext/error.hpp"
#include "ktnext/metrics.hpp"
#include "ktnext/model.hpp"
#include "oracles.hpp"

using namespace ktnext;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("ktnext_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("mask: central lines, all-ones case, reported effective acceleration") {
  const fs::path d = fresh_dir("mask");
  const std::string path = (d / "m9.ckm").string();
  const Result r = run_cli({"mask", "--accel", "9", "--center", "4", "--frames", "30", "--cols", "190", "--output", path});
  REQUIRE(r.code == 0);
  const SamplingMask m = load_mask(path);
  CHECK(m.t_frames() == 30);
  CHECK(m.cols() == 190);
  for (std::size_t t = 0; t < 30; ++t)
    for (std::size_t x = 93; x < 97; ++x) CHECK(m.sampled(t, x));
  std::size_t count = 0;
  for (long t = 0; t < 30; ++t)
    for (long x = 0; x < 190; ++x) count += oracle::shear_member(t, x, 9, 1, 190, 4);
  std::ostringstream expect;
  expect << std::setprecision(17) << 190.0 * 30.0 / double(count);
  CHECK(r.out.find("effective acceleration: " + expect.str()) != std::string::npos);
  CHECK(fs::exists(path + ".manifest.json"));

  const std::string ones = (d / "ones.ckm").string();
  REQUIRE(run_cli({"mask", "--accel", "1", "--center", "0", "--frames", "3", "--cols", "7", "--output", ones}).code == 0);
  const SamplingMask o = load_mask(ones);
  CHECK(o.total_sampled() == 21);
}

TEST_CASE("exit codes") {
  const fs::path d = fresh_dir("codes");
  CHECK(run_cli({}).code == cli::kFlagError);
  CHECK(run_cli({"mask", "--bogus"}).code == cli::kFlagError);
  CHECK(run_cli({"mask", "--accel", "x", "--output", (d / "a").string()}).code == cli::kFlagError);
  CHECK(run_cli({"mask", "--accel", "0", "--output", (d / "a").string()}).code == cli::kFlagError);
  CHECK(run_cli({"mask"}).code == cli::kFlagError);
  CHECK(run_cli({"--help"}).code == cli::kOk);
  CHECK(run_cli({"train", "--input", (d / "missing.ckt").string(), "--checkpoint", (d / "c").string()}).code ==
        cli::kIoError);
  std::ofstream(d / "junk.ckt", std::ios::binary) << "JUNKJUNKJUNKJUNKJUNK";
  CHECK(run_cli({"train", "--input", (d / "junk.ckt").string(), "--checkpoint", (d / "c").string()}).code ==
        cli::kFormatError);
  const std::string prefix = (d / "p").string();
  REQUIRE(run_cli({"simulate", "--seed", "1", "--frames", "8", "--rows", "16", "--cols", "16", "--output", prefix}).code == 0);
  CHECK(run_cli({"train", "--input", prefix + ".gt.ckt", "--checkpoint", (d / "c").string(), "--lambda", "-2"}).code ==
        cli::kFlagError);
  CHECK(run_cli({"train", "--input", prefix + ".gt.ckt", "--checkpoint", (d / "c").string(), "--lambda", "abc"}).code ==
        cli::kFlagError);
  const Result nan = run_cli({"train", "--input", prefix + ".gt.ckt", "--checkpoint", (d / "c").string(), "--steps",
                              "3", "--channels", "2", "--cascades", "1", "--lr", "1e300"});
  CHECK(nan.code == cli::kNumericError);
  CHECK(nan.err.find("non-finite") != std::string::npos);

  CHECK(cli::exit_code_for(ErrorCode::Truncated) == 4);
  CHECK(cli::exit_code_for(ErrorCode::Io) == 3);
  CHECK(cli::exit_code_for(ErrorCode::UndefinedMetric) == 5);
}

TEST_CASE("simulate is byte-identical for a fixed seed") {
  const fs::path d = fresh_dir("sim");
  for (const char* p : {"a", "b"}) {
    REQUIRE(run_cli({"simulate", "--seed", "4", "--frames", "8", "--rows", "16", "--cols", "12", "--accel", "3",
                     "--output", (d / p).string()})
                .code == 0);
  }
  for (const char* ext : {".gt.ckt", ".kspace.ckt", ".mask.ckm"}) {
    CHECK(slurp(d / (std::string("a") + ext)) == slurp(d / (std::string("b") + ext)));
  }
  const ComplexVolume gt = load_sequence(d / "a.gt.ckt");
  CHECK(gt.t_frames() == 8);
  CHECK(gt.rows() == 16);
  CHECK(gt.cols() == 12);
}

TEST_CASE("train, reconstruct, evaluate, render, replay") {
  const fs::path d = fresh_dir("pipeline");
  const auto p = [&](const std::string& n) { return (d / n).string(); };
  for (const char* s : {"s2", "s1"}) {
    REQUIRE(run_cli({"simulate", "--seed", s[1] == '1' ? "11" : "12", "--frames", "8", "--rows", "16", "--cols", "16",
                     "--accel", "4", "--output", p(s)})
                .code == 0);
  }
  REQUIRE(run_cli({"train", "--input", p("s1.gt.ckt"), "--mask", p("s1.mask.ckm"), "--steps", "3", "--cascades", "1",
                   "--channels", "3", "--lr", "1e-3", "--seed", "2", "--checkpoint", p("model.ktnp"), "--output",
                   p("history.csv"), "--deterministic"})
              .code == 0);
  const auto hist = read_csv(p("history.csv"));
  REQUIRE(hist.size() == 4);
  CHECK(hist[0] == std::vector<std::string>{"step", "loss", "psnr_train"});

  for (const char* s : {"s1", "s2"}) {
    const Result r = run_cli({"reconstruct", "--input", p(std::string(s) + ".kspace.ckt"), "--mask", p("s1.mask.ckm"),
                              "--checkpoint", p("model.ktnp"), "--output", p(std::string(s) + ".rec.ckt"),
                              "--intermediates"});
    REQUIRE(r.code == 0);
  }
  CHECK(fs::exists(p("s1.rec.ckt.cascade1.ckt")));
  CHECK(fs::exists(p("s1.rec.ckt.cascade1.xf.ckt")));

  // input order deliberately reversed; rows come back sorted by file name
  const Result ev = run_cli({"evaluate", "--input", p("s2.rec.ckt"), p("s1.rec.ckt"), "--reference", p("s2.gt.ckt"),
                             p("s1.gt.ckt"), "--kspace", p("s2.kspace.ckt"), p("s1.kspace.ckt"), "--mask",
                             p("s1.mask.ckm"), "--output", p("metrics.csv")});
  REQUIRE(ev.code == 0);
  const auto rows = read_csv(p("metrics.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"file", "psnr", "ssim", "hfen", "psnr_zf", "ssim_zf", "hfen_zf"});
  CHECK(rows[1][0] == "s1.rec.ckt");
  CHECK(rows[2][0] == "s2.rec.ckt");
  const ComplexVolume rec = load_sequence(p("s1.rec.ckt")), gt = load_sequence(p("s1.gt.ckt"));
  const ReconMetrics lib = evaluate(rec, gt);
  CHECK(std::stod(rows[1][1]) == lib.psnr);
  CHECK(std::stod(rows[1][2]) == lib.ssim);
  CHECK(std::stod(rows[1][3]) == lib.hfen);
  const SamplingMask mask = load_mask(p("s1.mask.ckm"));
  const ReconMetrics zf = evaluate(zero_filled(KtMeasurement(load_sequence(p("s1.kspace.ckt"), Domain::KSpace), mask)), gt);
  CHECK(std::stod(rows[1][4]) == zf.psnr);
  CHECK(std::stod(rows[1][6]) == zf.hfen);

  const Result rd = run_cli({"render", "--input", p("s1.rec.ckt"), "--reference", p("s1.gt.ckt"), "--output", p("fig")});
  REQUIRE(rd.code == 0);
  CHECK(fs::exists(d / "fig" / "manifest.json"));
  const std::string pgm = slurp(d / "fig" / "frame_000.pgm");
  CHECK(pgm.rfind("P5\n16 16\n255\n", 0) == 0);
  CHECK(pgm.size() == std::string("P5\n16 16\n255\n").size() + 256);
  CHECK(fs::exists(d / "fig" / "frame_007_error.pgm"));
  CHECK(fs::exists(d / "fig" / "xt_row8.pgm"));
  CHECK(fs::exists(d / "fig" / "xf_row8.pgm"));

  // replay reproduces each output byte for byte
  const cli::RunManifest man = cli::read_manifest(p("model.ktnp.manifest.json"));
  CHECK(man.command == "train");
  CHECK(man.deterministic);
  CHECK(man.seed == 2);
  CHECK(man.outputs.size() == 2);
  const std::string ckpt = slurp(p("model.ktnp")), csv = slurp(p("history.csv"));
  const std::string met = slurp(p("metrics.csv"));
  fs::remove(p("model.ktnp"));
  fs::remove(p("metrics.csv"));
  REQUIRE(run_cli({"replay", "--input", p("model.ktnp.manifest.json")}).code == 0);
  CHECK(slurp(p("model.ktnp")) == ckpt);
  CHECK(slurp(p("history.csv")) == csv);
  REQUIRE(run_cli({"replay", "--input", p("metrics.csv.manifest.json")}).code == 0);
  CHECK(slurp(p("metrics.csv")) == met);
}

TEST_CASE("full mask: lossless reconstruction reported as inf") {
  const fs::path d = fresh_dir("full");
  const auto p = [&](const std::string& n) { return (d / n).string(); };
  REQUIRE(run_cli({"mask", "--accel", "1", "--center", "0", "--frames", "8", "--cols", "16", "--output", p("full.ckm")}).code == 0);
  REQUIRE(run_cli({"simulate", "--seed", "3", "--frames", "8", "--rows", "16", "--cols", "16", "--mask", p("full.ckm"),
                   "--output", p("s")})
              .code == 0);
  REQUIRE(run_cli({"train", "--input", p("s.gt.ckt"), "--steps", "0", "--cascades", "1", "--channels", "2",
                   "--checkpoint", p("m.ktnp")})
              .code == 0);
  // the stored gt is f32 on disk; write the reference from the same path so both sides match
  REQUIRE(run_cli({"reconstruct", "--input", p("s.kspace.ckt"), "--mask", p("full.ckm"), "--checkpoint", p("m.ktnp"),
                   "--output", p("r.ckt")})
              .code == 0);
  REQUIRE(run_cli({"evaluate", "--input", p("r.ckt"), "--reference", p("r.ckt"), "--kspace", p("s.kspace.ckt"),
                   "--mask", p("full.ckm"), "--output", p("e.csv")})
              .code == 0);
  const auto rows = read_csv(p("e.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "inf");
  CHECK(rows[1][3] == "0");
}

TEST_CASE("manifest round trip and thread cap") {
  const fs::path d = fresh_dir("manifest");
  cli::RunManifest m;
  m.command = "mask";
  m.argv = {"mask", "--accel", "4"};
  m.config = R"({"accel":4})";
  m.seed = 18446744073709551615ULL;
  m.deterministic = true;
  m.inputs = {"a"};
  m.outputs = {"b", "c"};
  m.timestamp = "2026-01-01T00:00:00Z";
  cli::write_manifest(d / "m.json", m);
  const cli::RunManifest back = cli::read_manifest(d / "m.json");
  CHECK(back.argv == m.argv);
  CHECK(back.seed == m.seed);
  CHECK(back.outputs == m.outputs);
  CHECK(back.deterministic);
  std::ofstream(d / "bad.json") << "{not json";
  CHECK_THROWS_AS((void)cli::read_manifest(d / "bad.json"), Error);

  ::setenv("KTNEXT_THREADS", "1", 1);
  CHECK(cli::thread_cap() == 1);
  ::setenv("KTNEXT_THREADS", "0", 1);
  CHECK(cli::thread_cap() >= 1);
  ::unsetenv("KTNEXT_THREADS");
  CHECK(cli::thread_cap() >= 1);
}

}
