#include <algorithm>
#include <cmath>

#include "snowfuse/error.hpp"
#include "snowfuse/nn/rng.hpp"
#include "snowfuse/synth.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::synth {

namespace {

enum Stream : std::uint64_t {
  kMask = 1,
  kDem,
  kSar,
  kRatio,
  kVisible,
  kWeather,
  kModis,
  kNoise,
  kStations,
};

nn::SeededRng stream(std::uint64_t seed, std::size_t basin, Stream s, std::size_t sub = 0) {
  return nn::SeededRng(seed).fork((static_cast<std::uint64_t>(basin) << 40) ^ (static_cast<std::uint64_t>(s) << 32) ^ sub);
}

// Smoothed white noise rescaled to zero mean, unit variance.
std::vector<double> smooth_field(nn::SeededRng rng, std::size_t rows, std::size_t cols, double sigma) {
  raster::Raster white(raster::GridSpec{0.0, 0.0, 1.0, rows, cols, ""}, 1);
  for (auto& v : white.values()) v = static_cast<float>(rng.normal());
  auto f = eval::gaussian_smooth_values(white, sigma);
  double m = 0.0, ss = 0.0;
  for (double v : f) m += v;
  m /= static_cast<double>(f.size());
  for (double v : f) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(f.size()));
  for (auto& v : f) v = (v - m) / sd;
  return f;
}

raster::GridSpec imagery_grid(const raster::GridSpec& g) {
  const double margin = kImageryMargin * kImageryCell;
  const auto per = static_cast<std::size_t>(kGridCell / kImageryCell);
  return {g.origin_x - margin, g.origin_y + margin, kImageryCell, g.rows * per + 2 * kImageryMargin,
          g.cols * per + 2 * kImageryMargin, g.crs_tag};
}

double patch_band_mean(const nn::Tensor& patch, std::size_t band, std::size_t p) {
  const auto v = patch.values();
  double s = 0.0;
  for (std::size_t i = 0; i < p * p; ++i) s += v[band * p * p + i];
  return s / static_cast<double>(p * p);
}

void standardize(std::vector<double>& v) {
  double m = 0.0, ss = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  for (auto& x : v) x = sd > 0.0 ? (x - m) / sd : 0.0;
}

raster::BasinMask make_mask(const SynthConfig& cfg, std::size_t b) {
  raster::GridSpec g{300000.0 + 50000.0 * static_cast<double>(b), 4100000.0, kGridCell, cfg.grid_rows, cfg.grid_cols,
                     "EPSG:32611"};
  auto rng = stream(cfg.seed, b, kMask);
  const double a = 0.5 * static_cast<double>(g.rows) * rng.uniform(0.85, 1.0);
  const double c = 0.5 * static_cast<double>(g.cols) * rng.uniform(0.85, 1.0);
  std::vector<std::uint8_t> inside(g.rows * g.cols, 0);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t k = 0; k < g.cols; ++k) {
      const double dy = (static_cast<double>(r) + 0.5 - 0.5 * static_cast<double>(g.rows)) / a;
      const double dx = (static_cast<double>(k) + 0.5 - 0.5 * static_cast<double>(g.cols)) / c;
      inside[r * g.cols + k] = dx * dx + dy * dy <= 1.0 ? 1 : 0;
    }
  }
  return raster::BasinMask(g, std::move(inside), basin_name(b));
}

raster::Raster make_dem(const SynthConfig& cfg, std::size_t b, const raster::GridSpec& img) {
  auto rng = stream(cfg.seed, b, kDem);
  const auto relief = smooth_field(rng.fork(1), img.rows, img.cols, 8.0);
  auto fine = rng.fork(2);
  raster::Raster dem(img, 1);
  for (std::size_t i = 0; i < relief.size(); ++i) {
    dem.values()[i] = static_cast<float>(2400.0 + 500.0 * relief[i] + cfg.terrain_roughness * fine.normal());
  }
  return dem;
}

raster::Raster make_sar(const SynthConfig& cfg, std::size_t b, std::size_t d, const raster::GridSpec& img) {
  auto rng = stream(cfg.seed, b, kSar, d);
  const auto f = smooth_field(rng.fork(1), img.rows, img.cols, 4.0);
  auto n = rng.fork(2);
  raster::Raster out(img, 2);
  const std::size_t px = img.rows * img.cols;
  for (std::size_t i = 0; i < px; ++i) {
    out.values()[i] = static_cast<float>(-11.0 + 2.5 * f[i] + 0.5 * n.normal());
    out.values()[px + i] = static_cast<float>(-18.0 + 2.5 * f[i] + 0.5 * n.normal());
  }
  return out;
}

raster::Raster make_spectral(const SynthConfig& cfg, std::size_t b, std::size_t d, const raster::GridSpec& img) {
  auto rng = stream(cfg.seed, b, kRatio, d);
  const auto ratio = smooth_field(rng.fork(1), img.rows, img.cols, 4.0);
  auto n = rng.fork(2);
  auto vis = stream(cfg.seed, b, kVisible, d);
  const auto f2 = smooth_field(vis.fork(1), img.rows, img.cols, 4.0);
  const auto f4 = smooth_field(vis.fork(2), img.rows, img.cols, 4.0);
  const auto f8 = smooth_field(vis.fork(3), img.rows, img.cols, 4.0);
  raster::Raster out(img, 5);
  const std::size_t px = img.rows * img.cols;
  auto v = out.values();
  for (std::size_t i = 0; i < px; ++i) {
    v[i] = static_cast<float>(0.30 + 0.05 * f2[i]);
    v[px + i] = static_cast<float>(0.25 + 0.05 * f4[i]);
    v[2 * px + i] = static_cast<float>(0.35 + 0.05 * f8[i]);
    v[3 * px + i] = static_cast<float>(0.25 * std::exp(0.5 * ratio[i]) * (1.0 + 0.02 * n.normal()));
    v[4 * px + i] = static_cast<float>(0.25 * std::exp(-0.5 * ratio[i]) * (1.0 + 0.02 * n.normal()));
  }
  return out;
}

// Daily table for one cell covering the 11-day window of every date.
features::WeatherSeries make_weather(const SynthConfig& cfg, std::size_t b, std::size_t cell) {
  auto w = stream(cfg.seed, b, kWeather, cell);
  auto m = stream(cfg.seed, b, kModis, cell);
  std::vector<Date> days;
  for (const auto& d : cfg.dates) {
    for (long k = 10; k >= 0; --k) days.push_back(d - k);
  }
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());

  std::vector<features::WeatherRecord> recs;
  for (const auto& day : days) {
    features::WeatherRecord r;
    r.date = day;
    r.precip_total = 3.0 * std::exp(0.8 * w.normal());
    r.temp_max = 5.0 + 4.0 * w.normal();
    r.temp_min = r.temp_max - 8.0 - 2.0 * std::abs(w.normal());
    r.wind_dir = std::min(359.999, 360.0 * w.uniform());
    r.wind_vel = 3.0 * std::exp(0.3 * w.normal());

    // four 500 m MODIS pixels per cell, NDSI-style 0..100 scale
    const bool cloudy = m.uniform() < cfg.cloud_fraction;
    const double snow = m.uniform(0.05, 0.95);
    const double albedo = m.uniform(0.3, 0.8);
    std::array<std::optional<double>, 4> sp, ap;
    for (std::size_t k = 0; k < 4; ++k) {
      const bool masked = cloudy || m.uniform() < 0.1;
      const double s = 100.0 * std::clamp(snow + 0.03 * m.normal(), 0.0, 1.0);
      const double a = 100.0 * std::clamp(albedo + 0.03 * m.normal(), 0.0, 1.0);
      if (!masked) {
        sp[k] = s;
        ap[k] = a;
      }
    }
    r.snow_cover = features::modis_tabular(sp, 100.0);
    r.albedo = features::modis_tabular(ap, 100.0);
    recs.push_back(r);
  }
  return features::WeatherSeries(std::move(recs));
}

raster::Raster make_aso(const raster::BasinMask& mask, const std::vector<double>& cell_inches) {
  const auto& g = mask.spec();
  const auto per = static_cast<std::size_t>(kGridCell / kAsoCell);
  raster::GridSpec a{g.origin_x, g.origin_y, kAsoCell, g.rows * per, g.cols * per, g.crs_tag};
  raster::Raster aso(a, 1);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) {
      const std::size_t cell = (r / per) * g.cols + c / per;
      if (!mask.contains(r / per, c / per)) {
        aso.set_nodata(r, c);
      } else {
        aso.set(r, c, static_cast<float>(cell_inches[cell] / raster::kInchesPerMeter));
      }
    }
  }
  return aso;
}

}  // namespace

std::string basin_name(std::size_t index) {
  static const char* names[] = {"Feather", "Yuba",   "Truckee",      "Carson", "Tuolumne",
                                "Merced",  "San Joaquin", "Kings Canyon", "Kaweah"};
  if (index < 9) return names[index];
  return "Basin " + std::to_string(index + 1);
}

SynthScene generate_scene(const SynthConfig& cfg, const train::SplitRule& rule) {
  cfg.validate();
  if (cfg.grid_rows < 4 || cfg.grid_cols < 4) {
    throw ArgumentError("generate_scene: basin grid must be at least 4x4 cells, got " + std::to_string(cfg.grid_rows) +
                        "x" + std::to_string(cfg.grid_cols));
  }
  rule.validate();
  SynthScene scene;
  scene.config = cfg;

  // 1. raw inputs
  for (std::size_t b = 0; b < cfg.basin_count; ++b) {
    auto mask = make_mask(cfg, b);
    const auto img = imagery_grid(mask.spec());
    BasinWorld w{mask, make_dem(cfg, b, img), {}, cfg.dates, {}, {}, {}, {}};
    w.weather.resize(mask.spec().rows * mask.spec().cols);
    for (std::size_t i = 0; i < w.weather.size(); ++i) {
      if (mask.inside()[i]) w.weather[i] = make_weather(cfg, b, i);
    }
    for (std::size_t d = 0; d < cfg.dates.size(); ++d) {
      w.sar.push_back(make_sar(cfg, b, d, img));
      w.spectral.push_back(make_spectral(cfg, b, d, img));
    }
    scene.basins.push_back(std::move(w));
  }

  // 2. samples through the ingestion path, targets still unknown
  std::vector<const features::WeatherSeries*> all_series;
  for (const auto& w : scene.basins) {
    for (const auto& s : w.weather) {
      if (!s.empty()) all_series.push_back(&s);
    }
  }
  const auto defaults = train::imputation_defaults(all_series, rule);
  std::vector<model::CellSample> samples;
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // (basin, date) per sample
  for (std::size_t b = 0; b < scene.basins.size(); ++b) {
    const auto& w = scene.basins[b];
    const auto terrain = train::terrain_stack(w.dem);
    const std::size_t cols = w.mask.spec().cols;
    train::BasinInputs inputs{w.mask, [&w, cols](std::size_t r, std::size_t c) -> const features::WeatherSeries& {
                                return w.weather[r * cols + c];
                              }};
    for (std::size_t d = 0; d < w.dates.size(); ++d) {
      train::SceneInputs sc{w.dates[d], w.sar[d], w.spectral[d], std::nullopt};
      for (auto& s : train::build_samples(inputs, terrain, sc, defaults, cfg.patch_size)) {
        samples.push_back(std::move(s));
        origin.emplace_back(b, d);
      }
    }
  }

  // 3. latent factors from each source's own inputs
  const std::size_t n = samples.size(), p = cfg.patch_size;
  std::array<std::vector<double>, 5> lat;
  for (auto& l : lat) l.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[i];
    const auto wv = s.weather_seq.values();
    double precip = 0.0;
    for (std::size_t t = 0; t < features::kWeatherWindowDays; ++t) precip += wv[t * features::kWeatherFields + 2];
    lat[0][i] = patch_band_mean(s.terrain_patch, 0, p);   // elevation
    lat[1][i] = patch_band_mean(s.spectral_patch, 2, p);  // B8A/B12 ratio
    lat[2][i] = patch_band_mean(s.sar_patch, 2, p);       // VV + VH
    lat[3][i] = precip;
    lat[4][i] = wv[(features::kWeatherWindowDays - 1) * features::kWeatherFields + 0];  // target-day snow cover
  }
  for (auto& l : lat) standardize(l);

  // 4. SWE, ASO rasters and truth through aggregation
  const std::array<double, 5> w = {cfg.w_elev, cfg.w_ratio, cfg.w_sar, cfg.w_precip, cfg.w_modis};
  std::vector<std::vector<std::vector<double>>> cell_swe(scene.basins.size());
  for (std::size_t b = 0; b < scene.basins.size(); ++b) {
    const auto& g = scene.basins[b].mask.spec();
    cell_swe[b].assign(cfg.dates.size(), std::vector<double>(g.rows * g.cols, 0.0));
  }
  std::vector<nn::SeededRng> noise;
  for (std::size_t b = 0; b < scene.basins.size(); ++b) noise.push_back(stream(cfg.seed, b, kNoise));
  scene.latents.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [b, d] = origin[i];
    double y = cfg.intercept;
    for (std::size_t k = 0; k < 5; ++k) {
      scene.latents[i][k] = lat[k][i];
      y += w[k] * lat[k][i];
    }
    y += cfg.noise_std * noise[b].normal();
    const auto& g = scene.basins[b].mask.spec();
    cell_swe[b][d][samples[i].row * g.cols + samples[i].col] = std::max(0.0, y);
  }
  for (std::size_t b = 0; b < scene.basins.size(); ++b) {
    auto& bw = scene.basins[b];
    for (std::size_t d = 0; d < cfg.dates.size(); ++d) {
      bw.aso.push_back(make_aso(bw.mask, cell_swe[b][d]));
      bw.truth.push_back(train::truth_inches(bw.aso.back(), bw.mask));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [b, d] = origin[i];
    samples[i].target_swe = scene.basins[b].truth[d].at(samples[i].row, samples[i].col);
  }

  // 5. stations read the truth of the cell they sit in
  long long next_id = 1;
  for (std::size_t b = 0; b < scene.basins.size(); ++b) {
    const auto& bw = scene.basins[b];
    const auto& g = bw.mask.spec();
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < g.rows * g.cols; ++i) {
      if (bw.mask.inside()[i]) cells.push_back(i);
    }
    auto rng = stream(cfg.seed, b, kStations);
    for (std::size_t k = 0; k < cfg.station_count; ++k) {
      const std::size_t cell = cells[rng.index(cells.size())];
      const std::size_t r = cell / g.cols, c = cell % g.cols;
      eval::Station st;
      st.id = next_id++;
      st.x = g.origin_x + (static_cast<double>(c) + rng.uniform(0.05, 0.95)) * g.cell_size;
      st.y = g.origin_y - (static_cast<double>(r) + rng.uniform(0.05, 0.95)) * g.cell_size;
      const auto& dg = bw.dem.spec();
      const auto pr = static_cast<std::size_t>((dg.origin_y - st.y) / dg.cell_size);
      const auto pc = static_cast<std::size_t>((st.x - dg.origin_x) / dg.cell_size);
      st.elevation = bw.dem.at(pr, pc);
      for (std::size_t d = 0; d < bw.dates.size(); ++d) st.swe_by_date[bw.dates[d]] = bw.truth[d].at(r, c);
      scene.stations.add(std::move(st));
    }
  }

  scene.dataset = train::split_by_year(std::move(samples), rule);
  return scene;
}

}  // namespace snowfuse::synth
