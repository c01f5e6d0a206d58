// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "pipeline.hpp"
#include "snowfuse/eval.hpp"
#include "snowfuse/model.hpp"
#include "snowfuse/nn/ops.hpp"
#include "snowfuse/nn/param_store.hpp"
#include "snowfuse/raster.hpp"
#include "snowfuse/synth.hpp"
#include "snowfuse/train.hpp"
#include "support/eval_oracles.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/samples.hpp"

using namespace snowfuse;
using nn::Tensor;
using raster::GridSpec;
using raster::Raster;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("criterion %2d: %s  %s (%s)\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::map<std::string, raster::BasinMask> scene_masks(const synth::SynthScene& scene) {
  std::map<std::string, raster::BasinMask> m;
  for (const auto& b : scene.basins) m.emplace(b.mask.name(), b.mask);
  return m;
}

// ------------------------------------------------------------------ 1

void table2() {
  const auto rep = synth::inject_table2();
  std::vector<eval::AreaRmse> rows;
  for (const auto& r : rep.rows) rows.push_back({r.area_km2, r.rmse});
  const double overall = eval::area_weighted_overall(rows);
  const bool ok = rep.rows.size() == 9 && std::abs(overall - 7.45) <= 0.01 && overall == rep.overall_rmse;
  report(1, ok, "Table 2 overall RMSE", fmt("%.4f", overall) + " vs 7.45 +- 0.01");
}

// ------------------------------------------------------------------ 2

using LossFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCase {
  std::string name;
  std::function<std::pair<LossFn, std::vector<Tensor>>(nn::SeededRng&)> make;
};

void gradients() {
  constexpr int kSeeds = 100;
  const auto t0 = Clock::now();
  std::vector<GradCase> cases = {
      {"conv2d",
       [](nn::SeededRng& rng) {
         const std::size_t ci = 1 + rng.index(3), co = 1 + rng.index(3), k = 1 + 2 * rng.index(2);
         const std::size_t h = k + rng.index(4), w = k + rng.index(4), stride = 1 + rng.index(2), pad = rng.index(2);
         auto x = testing::random_tensor(rng, {ci, h, w});
         auto wt = testing::random_tensor(rng, {co, ci, k, k});
         const auto probe = nn::conv2d(x, wt, stride, pad);
         auto proj = testing::random_weights(rng, probe.size());
         LossFn f = [proj, stride, pad](const std::vector<Tensor>& in) {
           return nn::weighted_sum(nn::conv2d(in[0], in[1], stride, pad), proj);
         };
         return std::pair{f, std::vector<Tensor>{x, wt}};
       }},
      {"depthwise_conv2d",
       [](nn::SeededRng& rng) {
         const std::size_t c = 1 + rng.index(3), k = 3, h = 3 + rng.index(4), w = 3 + rng.index(4);
         const std::size_t stride = 1 + rng.index(2), pad = rng.index(2);
         auto x = testing::random_tensor(rng, {c, h, w});
         auto wt = testing::random_tensor(rng, {c, 1, k, k});
         auto proj = testing::random_weights(rng, nn::depthwise_conv2d(x, wt, stride, pad).size());
         LossFn f = [proj, stride, pad](const std::vector<Tensor>& in) {
           return nn::weighted_sum(nn::depthwise_conv2d(in[0], in[1], stride, pad), proj);
         };
         return std::pair{f, std::vector<Tensor>{x, wt}};
       }},
      {"add_channel_bias",
       [](nn::SeededRng& rng) {
         const std::size_t c = 1 + rng.index(4), h = 1 + rng.index(4), w = 1 + rng.index(4);
         auto x = testing::random_tensor(rng, {c, h, w});
         auto b = testing::random_tensor(rng, {c});
         auto proj = testing::random_weights(rng, c * h * w);
         LossFn f = [proj](const std::vector<Tensor>& in) {
           return nn::weighted_sum(nn::add_channel_bias(in[0], in[1]), proj);
         };
         return std::pair{f, std::vector<Tensor>{x, b}};
       }},
      {"linear",
       [](nn::SeededRng& rng) {
         const std::size_t fi = 1 + rng.index(8), g = 1 + rng.index(8);
         auto x = testing::random_tensor(rng, {fi});
         auto w = testing::random_tensor(rng, {g, fi});
         auto b = testing::random_tensor(rng, {g});
         auto proj = testing::random_weights(rng, g);
         LossFn f = [proj](const std::vector<Tensor>& in) {
           return nn::weighted_sum(nn::linear(in[0], in[1], in[2]), proj);
         };
         return std::pair{f, std::vector<Tensor>{x, w, b}};
       }},
      {"relu",
       [](nn::SeededRng& rng) {
         const std::size_t n = 1 + rng.index(30);
         auto x = testing::random_tensor_away_from_zero(rng, {n});
         auto proj = testing::random_weights(rng, n);
         LossFn f = [proj](const std::vector<Tensor>& in) { return nn::weighted_sum(nn::relu(in[0]), proj); };
         return std::pair{f, std::vector<Tensor>{x}};
       }},
      {"global_avg_pool",
       [](nn::SeededRng& rng) {
         const std::size_t c = 1 + rng.index(4), h = 1 + rng.index(5), w = 1 + rng.index(5);
         auto x = testing::random_tensor(rng, {c, h, w});
         auto proj = testing::random_weights(rng, c);
         LossFn f = [proj](const std::vector<Tensor>& in) {
           return nn::weighted_sum(nn::global_avg_pool(in[0]), proj);
         };
         return std::pair{f, std::vector<Tensor>{x}};
       }},
      {"concat",
       [](nn::SeededRng& rng) {
         const std::size_t parts = 1 + rng.index(4);
         std::vector<Tensor> in;
         std::size_t total = 0;
         for (std::size_t i = 0; i < parts; ++i) {
           const std::size_t n = 1 + rng.index(6);
           in.push_back(testing::random_tensor(rng, {n}));
           total += n;
         }
         auto proj = testing::random_weights(rng, total);
         LossFn f = [proj](const std::vector<Tensor>& v) { return nn::weighted_sum(nn::concat(v), proj); };
         return std::pair{f, in};
       }},
      {"mse_loss",
       [](nn::SeededRng& rng) {
         const std::size_t n = 1 + rng.index(10);
         auto p = testing::random_tensor(rng, {n});
         auto t = testing::random_tensor(rng, {n});
         LossFn f = [](const std::vector<Tensor>& in) { return nn::mse_loss(in[0], in[1]); };
         return std::pair{f, std::vector<Tensor>{p, t}};
       }},
      {"lstm_sequence",
       [](nn::SeededRng& rng) {
         const std::size_t steps = 1 + rng.index(5), fi = 1 + rng.index(3), h = 1 + rng.index(3);
         std::vector<Tensor> in = {testing::random_tensor(rng, {steps, fi}), testing::random_tensor(rng, {4 * h, fi}),
                                   testing::random_tensor(rng, {4 * h, h}), testing::random_tensor(rng, {4 * h}),
                                   testing::random_tensor(rng, {h}), testing::random_tensor(rng, {h})};
         auto proj = testing::random_weights(rng, h);
         LossFn f = [proj](const std::vector<Tensor>& v) {
           return nn::weighted_sum(nn::lstm_sequence(v[0], {v[1], v[2], v[3]}, v[4], v[5]), proj);
         };
         return std::pair{f, in};
       }},
  };

  double worst = 0.0;
  std::string worst_op;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (int s = 0; s < kSeeds; ++s) {
      nn::SeededRng rng(100000 * (c + 1) + s);
      auto [f, inputs] = cases[c].make(rng);
      const double e = testing::max_gradient_error(f, inputs);
      if (!(e <= worst)) {
        worst = e;
        worst_op = cases[c].name;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst < 1e-5 && secs < 60.0;
  report(2, ok, "finite-difference gradients, 9 ops x 100 seeds",
         "worst rel err " + fmt("%.2e", worst) + " in " + worst_op + ", " + fmt("%.1f s", secs));
}

// ------------------------------------------------------------------ 3

void overfit() {
  const auto t0 = Clock::now();
  const auto scene = synth::generate_scene(synth::preset("overfit"));
  auto samples = scene.dataset.subset(train::Split::Train);
  if (samples.size() < 32) {
    report(3, false, "overfit 32 noise-free samples", "preset has only " + std::to_string(samples.size()) + " samples");
    return;
  }
  samples.resize(32);
  const auto data = train::split_by_year(samples, train::SplitRule{});
  train::TrainConfig tc;
  tc.max_steps = 5000;
  tc.eval_every = 50;
  tc.target_train_rmse = 0.1;
  const model::FusionConfig mc;

  const auto a = train::train_model(data, mc, tc);
  const auto b = train::train_model(data, mc, tc);
  const double final_rmse = a.history.back().train_rmse;
  bool same = a.history.size() == b.history.size() && a.last.params().bit_identical(b.last.params());
  for (std::size_t i = 0; same && i < a.history.size(); ++i) same = a.history[i].train_rmse == b.history[i].train_rmse;
  const double secs = seconds_since(t0);
  const bool ok = final_rmse < 0.1 && a.steps_run <= 5000 && same && secs < 120.0;
  report(3, ok, "overfit 32 noise-free samples",
         "train RMSE " + fmt("%.4f", final_rmse) + " after " + std::to_string(a.steps_run) + " steps, " +
             (same ? "repeat identical" : "repeat differs") + ", " + fmt("%.1f s", secs) + " for two runs");
}

// ------------------------------------------------------------------ 4

train::TrainConfig sierra_train_config(std::uint64_t seed) {
  train::TrainConfig tc;
  tc.max_steps = 1500;
  tc.eval_every = 1500;
  tc.seed = seed;
  return tc;
}

void fusion_gain() {
  const auto t0 = Clock::now();
  const std::vector<std::uint64_t> seeds = {7, 8, 9, 10, 11};
  std::map<std::string, double> sums;
  for (auto s : seeds) {
    auto cfg = synth::preset("sierra-like");
    cfg.seed = s;
    const auto scene = synth::generate_scene(cfg);
    const auto rows = pipeline::run_ablation(scene.dataset, scene_masks(scene), model::FusionConfig{},
                                             sierra_train_config(s), {s}, 1);
    for (const auto& r : rows) sums[r.source] += r.mean;
  }
  const double n = static_cast<double>(seeds.size());
  const double fused = sums.at("all") / n;
  std::string best_name;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [name, v] : sums) {
    if (name != "all" && v / n < best) {
      best = v / n;
      best_name = name;
    }
  }
  const double gain = 1.0 - fused / best;
  const double secs = seconds_since(t0);
  const bool ok = gain >= 0.2 && secs < 900.0;
  report(4, ok, "fusion beats best single source by >= 20%",
         "fused " + fmt("%.3f", fused) + " vs " + best_name + " " + fmt("%.3f", best) + " (" +
             fmt("%.1f%% lower", 100.0 * gain) + "), mean of 5 seeds, " + fmt("%.0f s", secs));
}

// ------------------------------------------------------------------ 5

void aggregation() {
  nn::SeededRng rng(505);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const long f = t % 10 == 0 ? 20 : 1 + static_cast<long>(rng.index(6));
    const std::size_t br = 1 + rng.index(4), bc = 1 + rng.index(4);
    const auto r = testing::random_raster(rng, br * f, bc * f, 1, rng.uniform(0.0, 0.99));
    const auto out = raster::aggregate_mean(r, f);
    const auto ref = testing::block_mean_oracle(r, static_cast<std::size_t>(f));
    bool ok = out.rows() == br && out.cols() == bc;
    for (std::size_t i = 0; ok && i < ref.size(); ++i) {
      ok = out.nodata_mask()[i] == (ref[i].nodata ? 1 : 0) &&
           (ref[i].nodata || out.values()[i] == static_cast<float>(ref[i].mean));
    }
    if (!ok) ++bad;
  }
  report(5, bad == 0, "aggregate_mean equals the block oracle", std::to_string(1000 - bad) + "/1000 rasters exact");
}

// ------------------------------------------------------------------ 6

void smoothing() {
  nn::SeededRng rng(606);
  const GridSpec g{300000.0, 4100000.0, 1000.0, 21, 21, "EPSG:32611"};

  bool constant_ok = true;
  for (int t = 0; t < 50; ++t) {
    Raster r(g, 1);
    const float c = static_cast<float>(rng.uniform(-50.0, 50.0));
    for (auto& v : r.values()) v = c;
    const auto out = eval::gaussian_smooth(r, rng.uniform(0.3, 4.0));
    for (auto v : out.values()) constant_ok = constant_ok && v == c;
  }

  Raster imp(g, 1);
  imp.set(10, 10, 1.0f);
  const auto got = eval::gaussian_smooth_values(imp, 1.0);
  const auto k = testing::kernel_oracle(1.0);
  const long rad = static_cast<long>(k.size() / 2);
  double impulse_err = 0.0;
  for (long i = 0; i < 21; ++i) {
    for (long j = 0; j < 21; ++j) {
      const long di = i - 10 + rad, dj = j - 10 + rad;
      const bool inside = di >= 0 && dj >= 0 && di < static_cast<long>(k.size()) && dj < static_cast<long>(k.size());
      const double want = inside ? k[di] * k[dj] : 0.0;
      impulse_err = std::max(impulse_err, std::abs(got[i * 21 + j] - want));
    }
  }

  double dense_err = 0.0;
  bool nodata_ok = true;
  for (int t = 0; t < 100; ++t) {
    const double sigma = rng.uniform(0.3, 3.0);
    const auto r = testing::random_raster(rng, 8 + rng.index(12), 8 + rng.index(12), 1, t % 2 ? 0.15 : 0.0, 1000.0);
    const auto a = eval::gaussian_smooth_values(r, sigma);
    const auto b = testing::dense_smooth_oracle(r, sigma);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::isnan(b[i])) {
        nodata_ok = nodata_ok && std::isnan(a[i]);
      } else {
        dense_err = std::max(dense_err, std::abs(a[i] - b[i]));
      }
    }
  }
  const bool ok = constant_ok && impulse_err < 1e-6 && dense_err < 1e-9 && nodata_ok;
  report(6, ok, "Gaussian smoothing",
         std::string("constant fields ") + (constant_ok ? "exact" : "changed") + ", impulse err " +
             fmt("%.1e", impulse_err) + ", dense oracle err " + fmt("%.1e", dense_err) + " over 100 fields");
}

// ------------------------------------------------------------------ 7

void baselines() {
  const auto t0 = Clock::now();
  nn::SeededRng rng(707);
  const Date d(2022, 3, 20);

  int nearest_bad = 0, layouts = 0;
  while (layouts < 100) {
    const GridSpec g{rng.uniform(0, 1e5), rng.uniform(1e5, 2e5), 1000.0, 1 + rng.index(15), 1 + rng.index(15),
                     "EPSG:32611"};
    eval::StationSet set;
    std::vector<eval::Station> raw;
    const std::size_t n = 1 + rng.index(12);
    for (std::size_t i = 0; i < n; ++i) {
      eval::Station s;
      s.id = static_cast<long long>(rng.index(1000000));
      s.x = g.origin_x + rng.uniform(-3000, 18000);
      s.y = g.origin_y - rng.uniform(-3000, 18000);
      s.swe_by_date[rng.uniform() < 0.3 ? Date(2022, 4, 10) : d] = static_cast<double>(i);
      if (std::any_of(raw.begin(), raw.end(), [&](const auto& r) { return r.id == s.id; })) continue;
      raw.push_back(s);
      set.add(s);
    }
    const auto want = testing::nearest_oracle(raw, d, g);
    if (want[0] < 0) continue;
    ++layouts;
    const auto field = eval::nearest_station_field(set, d, g);
    for (std::size_t i = 0; i < want.size(); ++i) {
      const auto& st = *std::find_if(raw.begin(), raw.end(), [&](const auto& s) { return s.id == want[i]; });
      if (field.values()[i] != static_cast<float>(st.swe_by_date.at(d))) {
        ++nearest_bad;
        break;
      }
    }
  }

  double zero_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const GridSpec g{0.0, 0.0, 1000.0, 2 + rng.index(10), 2 + rng.index(10), "EPSG:32611"};
    const auto mask = testing::random_mask(rng, g, 0.7);
    Raster truth(g, 1);
    for (auto& v : truth.values()) v = static_cast<float>(rng.uniform(0.0, 40.0));
    double sq = 0.0;
    std::size_t cnt = 0;
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        if (!mask.contains(r, c)) continue;
        sq += static_cast<double>(truth.at(r, c)) * truth.at(r, c);
        ++cnt;
      }
    }
    if (cnt == 0) continue;
    zero_err = std::max(zero_err, std::abs(eval::baseline_zero(truth, mask) - std::sqrt(sq / static_cast<double>(cnt))));
  }

  const auto scene = synth::generate_scene(synth::preset("sierra-like"));
  const auto masks = scene_masks(scene);
  const auto result = train::train_model(scene.dataset, model::FusionConfig{}, sierra_train_config(7));
  const auto items = pipeline::predict_items(result.best, scene.dataset, masks, train::Split::Test, 1);
  eval::BaselineInputs inputs;
  inputs.stations = &scene.stations;
  const auto rep = pipeline::score_items(items, masks, inputs);
  const double snotel = rep.snotel.value_or(0.0);

  const bool ok = nearest_bad == 0 && zero_err < 1e-9 && snotel > rep.overall_rmse;
  report(7, ok, "baselines",
         "nearest station " + std::to_string(100 - nearest_bad) + "/100 layouts, zero-baseline err " +
             fmt("%.1e", zero_err) + ", SNOTEL " + fmt("%.3f", snotel) + " > fused " + fmt("%.3f", rep.overall_rmse) +
             ", " + fmt("%.0f s", seconds_since(t0)));
}

// ------------------------------------------------------------------ 8

void loess() {
  nn::SeededRng rng(808);
  double lin_err = 0.0, quad_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(50 + rng.index(250));
    for (auto& v : x) v = rng.uniform(0.0, 40.0);
    const double a = rng.uniform(-3, 3), b = rng.uniform(-1, 1), c = rng.uniform(-0.1, 0.1);
    std::vector<double> lin(x.size()), quad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      lin[i] = a + b * x[i];
      quad[i] = a + b * x[i] + c * x[i] * x[i];
    }
    const double span = rng.uniform(0.2, 1.0);
    for (const auto& p : eval::loess_error_curve(x, lin, span)) {
      lin_err = std::max(lin_err, std::abs(p.fitted - (a + b * p.x)));
    }
    for (const auto& p : eval::loess_error_curve(x, quad, span)) {
      quad_err = std::max(quad_err, std::abs(p.fitted - testing::wls_oracle(x, quad, p.x, span)));
    }
  }
  report(8, lin_err < 1e-9 && quad_err < 1e-8, "Loess curve",
         "linear err " + fmt("%.1e", lin_err) + ", quadratic vs WLS err " + fmt("%.1e", quad_err));
}

// ------------------------------------------------------------------ 9

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void roundtrips() {
  nn::SeededRng rng(909);
  const auto dir = testing::scratch_dir("acceptance_io");
  int raster_ok = 0, ckpt_ok = 0;
  for (int t = 0; t < 100; ++t) {
    auto r = testing::random_raster(rng, 1 + rng.index(40), 1 + rng.index(40), 1 + rng.index(6), rng.uniform(0, 0.5));
    if (r.values().size() > 2) {
      r.values()[0] = -0.0f;
      r.values()[1] = 1e-42f;  // subnormal
    }
    const auto path = dir / ("r" + std::to_string(t) + ".rstr");
    raster::write_raster(r, path);
    const auto back = raster::read_raster(path);
    const auto h0 = testing::fnv1a(raster::encode_raster(r));
    if (h0 == testing::fnv1a(raster::encode_raster(back)) && h0 == testing::fnv1a(file_bytes(path)) &&
        back.bit_identical(r)) {
      ++raster_ok;
    }

    model::FusionConfig mc;
    mc.lstm_hidden = 1 + rng.index(8);
    mc.mlp_hidden = {1 + rng.index(16), 1 + rng.index(8)};
    model::FusionModel m(mc, 1000 + t);
    const auto s = testing::random_sample(rng, mc.patch_size);
    for (int step = 0; step < 1 + t % 3; ++step) {
      m.params().zero_grad();
      nn::mse_loss(m.forward_standardized(s), Tensor::scalar(1.0)).backward();
      m.params().adam_step(nn::AdamConfig{1e-3});
    }
    const auto stem = dir / ("m" + std::to_string(t));
    model::save_model(m, stem);
    const auto loaded = model::load_model(stem);
    const auto c0 = testing::fnv1a(m.params().encode());
    if (c0 == testing::fnv1a(loaded.params().encode()) && loaded.params().bit_identical(m.params()) &&
        model::forward(loaded, s) == model::forward(m, s)) {
      ++ckpt_ok;
    }
  }
  report(9, raster_ok == 100 && ckpt_ok == 100, "raster and checkpoint roundtrips",
         std::to_string(raster_ok) + "/100 rasters, " + std::to_string(ckpt_ok) + "/100 checkpoints bit-exact");
}

// ------------------------------------------------------------------ 10

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void pipeline_determinism() {
  const auto t0 = Clock::now();
  const auto root = testing::scratch_dir("acceptance_pipeline");
  std::string reports[2];
  std::string failure;
  for (int run = 0; run < 2; ++run) {
    const auto dir = root / ("run" + std::to_string(run));
    const auto data = (dir / "data").string(), manifest = (dir / "data" / "manifest.csv").string();
    const std::vector<std::vector<std::string>> steps = {
        {"synth", "--preset", "sierra-like", "--seed", "3", "--set", "basin_count=2", "-o", data},
        {"train", "--data", manifest, "-o", (dir / "run").string(), "--set", "max_steps=100", "--set",
         "eval_every=50"},
        {"predict", "--data", manifest, "--model", (dir / "run" / "model").string(), "-o", (dir / "pred").string()},
        {"evaluate", "--data", manifest, "--pred", (dir / "pred").string(), "-o", (dir / "report.csv").string()},
    };
    for (const auto& args : steps) {
      std::ostringstream out, err;
      const int code = cli::run(args, out, err);
      if (code != 0 && failure.empty()) failure = args[0] + " exited " + std::to_string(code) + ": " + err.str();
    }
    reports[run] = read_text(dir / "report.csv");
  }
  const bool ok = failure.empty() && !reports[0].empty() && reports[0] == reports[1];
  const std::string detail = failure.empty()
                                 ? (reports[0] == reports[1] ? "report bytes identical" : "report bytes differ") +
                                       std::string(", ") + std::to_string(reports[0].size()) + " bytes, " +
                                       fmt("%.1f s", seconds_since(t0))
                                 : failure;
  report(10, ok, "synth -> train -> evaluate is reproducible", detail);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {table2,    gradients, overfit, fusion_gain, aggregation,
                                                       smoothing, baselines, loess,   roundtrips,  pipeline_determinism};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, "threw", e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
