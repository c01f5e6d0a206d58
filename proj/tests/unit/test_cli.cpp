#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "snowfuse/eval.hpp"
#include "snowfuse/model.hpp"
#include "snowfuse/synth.hpp"
#include "snowfuse/text.hpp"
#include "snowfuse/train.hpp"
#include "support/oracles.hpp"

using namespace snowfuse;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// A small dataset written once and shared by the tests below.
const fs::path& dataset() {
  static const fs::path dir = [] {
    const auto d = testing::scratch_dir("cli_data");
    const auto r = call({"synth", "--preset", "overfit", "--set", "dates=2016-03-01,2022-03-20", "--set",
                         "station_count=2", "-o", (d / "data").string()});
    REQUIRE(r.code == 0);
    return d / "data";
  }();
  return dir;
}

std::string manifest() { return (dataset() / "manifest.csv").string(); }

}  // namespace

TEST_CASE("help and usage errors") {
  auto r = call({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("synth") != std::string::npos);
  CHECK(r.out.find("SNOWFUSE_THREADS") != std::string::npos);
  CHECK(call({}).code == cli::kUsage);
  CHECK(call({"frobnicate"}).code == cli::kUsage);
  CHECK(call({"train", "--data"}).code == cli::kUsage);

  r = call({"train", "--help"});
  CHECK(r.code == 0);
  for (const auto& [k, doc] : model::fusion_config_keys()) CHECK_MESSAGE(r.out.find(k) != std::string::npos, k);
  for (const auto& [k, doc] : train::train_config_keys()) CHECK_MESSAGE(r.out.find(k) != std::string::npos, k);
  r = call({"synth", "--help"});
  for (const auto& [k, doc] : synth::synth_config_keys()) CHECK_MESSAGE(r.out.find(k) != std::string::npos, k);
  r = call({"predict", "--help"});
  CHECK(r.out.find("test_years") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
  const auto out = testing::scratch_dir("cli_keys");
  auto r = call({"train", "--data", manifest(), "-o", (out / "run").string(), "--set", "momentum=0.9"});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("momentum") != std::string::npos);
  r = call({"synth", "-o", (out / "d").string(), "--set", "w_snow=1"});
  CHECK(r.code == cli::kUsage);
  r = call({"predict", "--data", manifest(), "--model", "x", "-o", (out / "p").string(), "--set", "lr=1"});
  CHECK(r.code == cli::kUsage);
  r = call({"train", "--data", manifest(), "-o", (out / "run").string(), "--set", "lr"});
  CHECK(r.code == cli::kUsage);
}

TEST_CASE("evaluate --inject-table2 prints the published overall") {
  const auto r = call({"evaluate", "--inject-table2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("7.45") != std::string::npos);
  CHECK(r.out.find("Kings Canyon") != std::string::npos);
}

TEST_CASE("smoke pipeline: synth, train, predict, smooth, evaluate, baselines, plot") {
  const auto out = testing::scratch_dir("cli_smoke");
  const auto run = (out / "run").string();
  auto r = call({"train", "--data", manifest(), "-o", run, "--set", "max_steps=30", "--set", "eval_every=10"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("resolved {\"command\":\"train\"") != std::string::npos);
  CHECK(fs::exists(out / "run" / "model.ckpt"));
  CHECK(fs::exists(out / "run" / "last.cfg"));
  CHECK(bytes(out / "run" / "loss.csv").rfind("step,train_rmse,val_rmse\n0,", 0) == 0);

  r = call({"predict", "--data", manifest(), "--model", run + "/model", "-o", (out / "pred").string()});
  REQUIRE(r.code == 0);
  r = call({"smooth", "--input", (out / "pred").string(), "-o", (out / "smooth").string(), "--sigma", "1"});
  REQUIRE(r.code == 0);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(out / "smooth")) n += e.path().extension() == ".rstr";
  CHECK(n == 2);

  r = call({"evaluate", "--data", manifest(), "--pred", (out / "smooth").string(), "-o", (out / "report.csv").string(),
            "--points", (out / "points.csv").string(), "--curve", (out / "curve.csv").string()});
  REQUIRE(r.code == 0);
  const auto rep = eval::read_report_csv(out / "report.csv");
  CHECK(std::isfinite(rep.overall_rmse));
  CHECK(rep.snotel.has_value());
  CHECK(rep.mean_pred.has_value());

  r = call({"baselines", "--data", manifest(), "-o", (out / "baselines.csv").string()});
  REQUIRE(r.code == 0);
  const auto b = bytes(out / "baselines.csv");
  CHECK(b.find("Zero Pred,") != std::string::npos);
  CHECK(b.find("\nSNOTEL,") != std::string::npos);
  CHECK(b.find("Zero Pred," + text::format_double(*rep.zero_pred) + "\n") != std::string::npos);
  CHECK(b.find("SNOTEL," + text::format_double(*rep.snotel) + "\n") != std::string::npos);

  r = call({"plot", "--report", (out / "report.csv").string(), "--points", (out / "points.csv").string(), "-o",
            (out / "plots").string()});
  REQUIRE(r.code == 0);
  const auto svg = bytes(out / "plots" / "error_vs_swe.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(bytes(out / "plots" / "rmse_by_basin.svg").find("Overall") != std::string::npos);

  r = call({"train", "--data", manifest(), "-o", (out / "resumed").string(), "--resume", run, "--set",
            "max_steps=40", "--set", "eval_every=10"});
  CHECK(r.code == 0);
  CHECK(r.out.find("trained 10 steps") != std::string::npos);
}

TEST_CASE("missing weather file exits 3 naming the path") {
  const auto out = testing::scratch_dir("cli_missing");
  const auto data = out / "data";
  fs::copy(dataset(), data, fs::copy_options::recursive);
  REQUIRE(call({"train", "--data", (data / "manifest.csv").string(), "-o", (out / "run").string(), "--set",
                "max_steps=2"})
              .code == 0);
  fs::path victim;
  for (const auto& e : fs::recursive_directory_iterator(data / "weather")) {
    if (e.is_regular_file()) victim = e.path();
  }
  fs::remove(victim);
  const auto r = call({"predict", "--data", (data / "manifest.csv").string(), "--model",
                       (out / "run" / "model").string(), "-o", (out / "pred").string()});
  CHECK(r.code == cli::kData);
  CHECK(r.err.find(victim.filename().string()) != std::string::npos);
  CHECK(call({"evaluate", "--data", (data / "manifest.csv").string(), "--pred", (out / "absent").string(), "-o",
              (out / "r.csv").string()})
            .code == cli::kData);
}

TEST_CASE("a diverging run exits 4") {
  const auto out = testing::scratch_dir("cli_nan");
  const auto r = call({"train", "--data", manifest(), "-o", out.string(), "--set", "lr=1e300", "--set",
                       "max_steps=5", "--set", "zero_init_head=0"});
  CHECK(r.code == cli::kNumerical);
  CHECK(r.err.find("non-finite loss at step") != std::string::npos);
}

TEST_CASE("SNOWFUSE_THREADS") {
  const auto out = testing::scratch_dir("cli_threads");
  REQUIRE(call({"train", "--data", manifest(), "-o", (out / "run").string(), "--set", "max_steps=3"}).code == 0);
  const auto model = (out / "run" / "model").string();
  REQUIRE(call({"predict", "--data", manifest(), "--model", model, "-o", (out / "p1").string()}).code == 0);
  setenv("SNOWFUSE_THREADS", "3", 1);
  const auto r = call({"predict", "--data", manifest(), "--model", model, "-o", (out / "p3").string()});
  setenv("SNOWFUSE_THREADS", "zero", 1);
  const auto bad = call({"predict", "--data", manifest(), "--model", model, "-o", (out / "px").string()});
  unsetenv("SNOWFUSE_THREADS");
  REQUIRE(r.code == 0);
  CHECK(r.err.find("\"threads\":3") != std::string::npos);
  CHECK(bad.code == cli::kUsage);
  for (const auto& e : fs::directory_iterator(out / "p1")) {
    CHECK(bytes(e.path()) == bytes(out / "p3" / e.path().filename()));
  }
}

TEST_CASE("ablate writes a Table 3 shaped CSV") {
  const auto out = testing::scratch_dir("cli_ablate");
  const auto r = call({"ablate", "--data", manifest(), "-o", (out / "t3.csv").string(), "--seeds", "1,2", "--set",
                       "max_steps=2"});
  REQUIRE(r.code == 0);
  const auto csv = bytes(out / "t3.csv");
  CHECK(csv.rfind("source,model,rmse,rmse_seed_1,rmse_seed_2\n", 0) == 0);
  for (const char* s : {"\nterrain,", "\nsar,", "\nspectral,", "\nmodis,", "\nweather,", "\nall,fusion,"}) {
    CHECK_MESSAGE(csv.find(s) != std::string::npos, s);
  }
}

TEST_CASE("synth output is byte-identical across runs") {
  const auto out = testing::scratch_dir("cli_synth_twice");
  for (const char* d : {"a", "b"}) {
    REQUIRE(call({"synth", "--preset", "overfit", "--seed", "3", "-o", (out / d).string()}).code == 0);
  }
  CHECK(bytes(out / "a" / "manifest.csv") == bytes(out / "b" / "manifest.csv"));
  CHECK(bytes(out / "a" / "synth.cfg") == bytes(out / "b" / "synth.cfg"));
  CHECK(bytes(out / "a" / "synth.cfg").find("seed=3") != std::string::npos);
}
