#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "doctest.h"
#include "snowfuse/error.hpp"
#include "snowfuse/synth.hpp"
#include "snowfuse/train.hpp"
#include "support/oracles.hpp"
#include "support/samples.hpp"
#include "support/samples_eq.hpp"

using namespace snowfuse;
using train::Split;
using train::SplitRule;

namespace {

train::Dataset small_dataset(std::size_t n, std::uint64_t seed) {
  nn::SeededRng rng(seed);
  std::vector<model::CellSample> v;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = testing::random_sample(rng);
    // a learnable target: depends on the terrain patch
    double m = 0.0;
    for (std::size_t k = 0; k < 256; ++k) m += s.terrain_patch.values()[k];
    s.target_swe = 5.0 + m / 16.0;
    s.date = Date(i % 4 == 3 ? 2022 : 2017, 3, 1);
    v.push_back(std::move(s));
  }
  return train::split_by_year(std::move(v), SplitRule{});
}

model::FusionConfig small_model() {
  model::FusionConfig c;
  c.sar_widths = {4, 4, 4};
  c.spectral_widths = {4, 4, 4};
  c.terrain_widths = {4, 4};
  return c;
}

train::TrainConfig quick(std::size_t steps) {
  train::TrainConfig t;
  t.max_steps = steps;
  t.eval_every = 5;
  t.batch_size = 4;
  return t;
}

}  // namespace

TEST_CASE("split rule") {
  SplitRule r;
  CHECK(r.assign(Date(2017, 3, 1)) == Split::Train);
  CHECK(r.assign(Date(2022, 4, 10)) == Split::Test);
  CHECK_THROWS_AS(r.assign(Date(2020, 3, 1)), UnassignedYearError);
  SplitRule overlap;
  overlap.test_years = {2019};
  CHECK_THROWS_AS(overlap.validate(), ConfigError);
  SplitRule empty;
  empty.train_years = {};
  CHECK_THROWS_AS(empty.validate(), ConfigError);

  SplitRule single;
  single.train_years = {2017};
  single.test_years = {};
  nn::SeededRng rng(1);
  std::vector<model::CellSample> v;
  for (int i = 0; i < 4; ++i) {
    auto s = testing::random_sample(rng);
    s.date = Date(2017, 3, 1 + i);
    v.push_back(s);
  }
  const auto d = train::split_by_year(v, single);
  CHECK(d.count(Split::Train) == 4);
  CHECK(d.count(Split::Test) == 0);
  v[2].date = Date(2018, 1, 1);
  CHECK_THROWS_AS(train::split_by_year(v, single), UnassignedYearError);
}

TEST_CASE("batch order is a per-epoch permutation") {
  for (std::size_t n : {1u, 7u, 16u, 50u}) {
    for (std::size_t b : {1u, 4u, 16u}) {
      std::vector<std::size_t> seen;
      const std::size_t steps = (3 * n + b - 1) / b;
      for (std::size_t s = 0; s < steps; ++s) {
        const auto idx = train::batch_indices(n, b, 9, s);
        CHECK(idx == train::batch_indices(n, b, 9, s));
        seen.insert(seen.end(), idx.begin(), idx.end());
      }
      for (std::size_t e = 0; e < 3; ++e) {
        std::set<std::size_t> epoch(seen.begin() + static_cast<long>(e * n),
                                    seen.begin() + static_cast<long>((e + 1) * n));
        CHECK(epoch.size() == n);
        CHECK(*epoch.rbegin() == n - 1);
      }
    }
  }
  CHECK(train::batch_indices(50, 8, 1, 0) != train::batch_indices(50, 8, 2, 0));
  CHECK_THROWS_AS(train::batch_indices(0, 4, 1, 0), ArgumentError);
}

TEST_CASE("imputation defaults average training-year observations") {
  std::vector<features::WeatherRecord> a(3), b(2);
  a[0].date = Date(2017, 1, 1), a[0].snow_cover = 0.2, a[0].albedo = 0.4;
  a[1].date = Date(2017, 1, 2), a[1].snow_cover = 0.6;
  a[2].date = Date(2022, 1, 1), a[2].snow_cover = 1.0, a[2].albedo = 1.0;
  b[0].date = Date(2018, 1, 1), b[0].snow_cover = 0.4, b[0].albedo = 0.8;
  b[1].date = Date(2018, 1, 2);
  const features::WeatherSeries sa(a), sb(b);
  const auto d = train::imputation_defaults({&sa, &sb}, SplitRule{});
  CHECK(d.snow_cover == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(d.albedo == doctest::Approx(0.6).epsilon(1e-15));
  const auto swapped = train::imputation_defaults({&sb, &sa}, SplitRule{});
  CHECK(swapped.snow_cover == d.snow_cover);
  CHECK(swapped.albedo == d.albedo);
  const auto none = train::imputation_defaults({}, SplitRule{});
  CHECK(none.snow_cover == 0.5);
}

TEST_CASE("train config parsing") {
  train::TrainConfig c;
  c.set("lr", "0.01");
  c.set("train_years", "2016,2017");
  c.set("test_years", "2018");
  c.set("zero_init_head", "false");
  CHECK(c.lr == 0.01);
  CHECK(c.split.train_years == std::vector<int>{2016, 2017});
  CHECK_FALSE(c.zero_init_head);
  CHECK_THROWS_AS(c.set("momentum", "0.9"), ConfigError);
  CHECK_THROWS_AS(c.set("batch_size", "-1"), ConfigError);
  train::TrainConfig zero;
  zero.batch_size = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  std::set<std::string> keys;
  for (const auto& [k, doc] : train::train_config_keys()) keys.insert(k);
  CHECK(keys.count("lr"));
  CHECK(keys.count("val_years"));
}

TEST_CASE("training is deterministic for a seed") {
  const auto d = small_dataset(24, 3);
  const auto a = train::train_model(d, small_model(), quick(10));
  const auto b = train::train_model(d, small_model(), quick(10));
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].train_rmse == b.history[i].train_rmse);
  CHECK(a.last.params().bit_identical(b.last.params()));
  CHECK(train::format_history_csv(a.history) == train::format_history_csv(b.history));
}

TEST_CASE("step-0 loss equals the mean-baseline loss") {
  const auto d = small_dataset(24, 4);
  const auto r = train::train_model(d, small_model(), quick(0));
  const auto tr = d.subset(Split::Train);
  double mean = 0.0;
  for (const auto& s : tr) mean += s.target_swe;
  mean /= static_cast<double>(tr.size());
  double sq = 0.0;
  for (const auto& s : tr) sq += (s.target_swe - mean) * (s.target_swe - mean);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].step == 0);
  CHECK(std::abs(r.history[0].train_rmse - std::sqrt(sq / static_cast<double>(tr.size()))) < 1e-12);
}

TEST_CASE("zero learning rate leaves the loss unchanged") {
  const auto d = small_dataset(16, 5);
  auto cfg = quick(15);
  cfg.lr = 0.0;
  cfg.zero_init_head = false;
  const auto r = train::train_model(d, small_model(), cfg);
  REQUIRE(r.history.size() == 4);
  for (const auto& h : r.history) CHECK(h.train_rmse == r.history[0].train_rmse);
}

TEST_CASE("training reduces the training loss") {
  const auto d = small_dataset(24, 6);
  auto cfg = quick(60);
  cfg.lr = 3e-3;
  const auto r = train::train_model(d, small_model(), cfg);
  CHECK(r.history.back().train_rmse < r.history.front().train_rmse);
  CHECK(r.steps_run == 60);
}

TEST_CASE("resuming from a checkpoint is bit-exact") {
  const auto d = small_dataset(20, 7);
  const auto full = train::train_model(d, small_model(), quick(12));
  const auto half = train::train_model(d, small_model(), quick(5));
  const auto dir = testing::scratch_dir("resume");
  model::save_model(half.last, dir / "half");
  const auto resumed = train::train_model(d, small_model(), quick(12), model::load_model(dir / "half"));
  CHECK(resumed.steps_run == 7);
  CHECK(resumed.last.params().bit_identical(full.last.params()));
  CHECK(resumed.history.back().train_rmse == full.history.back().train_rmse);

  auto other = small_model();
  other.lstm_hidden = 4;
  CHECK_THROWS_AS(train::train_model(d, other, quick(12), model::load_model(dir / "half")), ConfigError);
}

TEST_CASE("validation split drives best-model selection and early stopping") {
  auto d = small_dataset(24, 8);
  for (std::size_t i = 0; i < d.samples.size(); i += 5) d.splits[i] = Split::Val;
  auto cfg = quick(40);
  cfg.patience = 2;
  cfg.lr = 0.0;  // validation never improves after step 0
  const auto r = train::train_model(d, small_model(), cfg);
  CHECK(r.best_step == 0);
  CHECK(r.history.size() == 3);
  CHECK(r.history.back().val_rmse.has_value());
}

TEST_CASE("non-finite loss raises NumericalError naming the step") {
  auto d = small_dataset(8, 9);
  d.samples[0].target_swe = std::numeric_limits<double>::quiet_NaN();
  try {
    train::train_model(d, small_model(), quick(3));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("history CSV") {
  std::vector<train::HistoryRow> h{{0, 1.5, std::nullopt}, {10, 0.25, 0.75}};
  CHECK(train::format_history_csv(h) == "step,train_rmse,val_rmse\n0,1.5,\n10,0.25,0.75\n");
}

TEST_CASE("manifest roundtrip and weather placeholders") {
  const auto dir = testing::scratch_dir("manifest");
  std::vector<train::ManifestRow> rows{
      {"Kings Canyon", Date(2017, 3, 1), "terrain/k.rstr", "sar/k.rstr", "spectral/k.rstr",
       "weather/k/cell_{row}_{col}.csv", "aso/k.rstr"},
      {"Feather", Date(2022, 4, 10), "t.rstr", "s.rstr", "o.rstr", "w.csv", ""}};
  train::write_manifest(rows, dir / "manifest.csv");
  const auto back = train::read_manifest(dir / "manifest.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].basin == "Kings Canyon");
  CHECK(back[0].weather_csv == rows[0].weather_csv);
  CHECK(back[1].aso_path.empty());
  CHECK(back[1].date == Date(2022, 4, 10));
  CHECK(train::weather_path("w/cell_{row}_{col}.csv", 3, 12) == "w/cell_3_12.csv");
  CHECK(train::weather_path("w.csv", 3, 12) == "w.csv");
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "basin,date\nx,2017-03-01\n";
  }
  CHECK_THROWS_AS(train::read_manifest(dir / "bad.csv"), ParseError);
  CHECK_THROWS_AS(train::read_manifest(dir / "absent.csv"), IoError);
}

TEST_CASE("datasets loaded from disk equal the generated samples") {
  const auto cfg = synth::preset("overfit");
  const auto scene = synth::generate_scene(cfg);
  const auto dir = testing::scratch_dir("load_dataset");
  synth::write_dataset(scene, dir);
  const auto loaded = train::load_dataset(dir / "manifest.csv", SplitRule{}, cfg.patch_size);
  REQUIRE(loaded.samples.size() == scene.dataset.samples.size());
  bool all_same = true;
  for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
    all_same = all_same && testing::same_sample(loaded.samples[i], scene.dataset.samples[i]);
  }
  CHECK(all_same);
  CHECK(loaded.splits == scene.dataset.splits);

  // a missing per-cell weather file is reported by path
  std::filesystem::path victim;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "weather")) {
    if (e.is_regular_file()) {
      victim = e.path();
      break;
    }
  }
  REQUIRE(!victim.empty());
  std::filesystem::remove(victim);
  try {
    train::load_dataset(dir / "manifest.csv", SplitRule{}, cfg.patch_size);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(victim.filename().string()) != std::string::npos);
  }
}

TEST_CASE("build_samples without ASO yields zero targets for every basin cell") {
  const auto cfg = synth::preset("overfit");
  const auto scene = synth::generate_scene(cfg);
  const auto& w = scene.basins[0];
  train::BasinInputs in{w.mask, [&](std::size_t r, std::size_t c) -> const features::WeatherSeries& {
                          return w.weather[r * w.mask.spec().cols + c];
                        }};
  train::SceneInputs sc{w.dates[0], w.sar[0], w.spectral[0], std::nullopt};
  const auto samples = train::build_samples(in, train::terrain_stack(w.dem), sc, {}, cfg.patch_size);
  CHECK(samples.size() == w.mask.inside_count());
  for (const auto& s : samples) CHECK(s.target_swe == 0.0);
}
