#include <algorithm>
#include <cmath>
#include <map>

#include "snowfuse/error.hpp"
#include "snowfuse/text.hpp"
#include "snowfuse/train.hpp"

namespace snowfuse::train {

namespace {

bool contains_year(const std::vector<int>& years, int y) { return std::find(years.begin(), years.end(), y) != years.end(); }

}  // namespace

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

void SplitRule::validate() const {
  if (train_years.empty()) throw ConfigError("split: train_years is empty");
  for (int y : train_years) {
    if (contains_year(val_years, y) || contains_year(test_years, y)) {
      throw ConfigError("split: year " + std::to_string(y) + " assigned to more than one split");
    }
  }
  for (int y : val_years) {
    if (contains_year(test_years, y)) {
      throw ConfigError("split: year " + std::to_string(y) + " assigned to more than one split");
    }
  }
}

bool SplitRule::is_train_year(int year) const { return contains_year(train_years, year); }

Split SplitRule::assign(Date d) const {
  const int y = d.year();
  if (contains_year(train_years, y)) return Split::Train;
  if (contains_year(val_years, y)) return Split::Val;
  if (contains_year(test_years, y)) return Split::Test;
  throw UnassignedYearError("sample dated " + d.iso() + ": year " + std::to_string(y) + " is in no split");
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<CellSample> Dataset::subset(Split s) const {
  std::vector<CellSample> out;
  for (auto i : indices(s)) out.push_back(samples[i]);
  return out;
}

Dataset split_by_year(std::vector<CellSample> samples, const SplitRule& rule) {
  rule.validate();
  Dataset ds;
  ds.splits.reserve(samples.size());
  for (const auto& s : samples) ds.splits.push_back(rule.assign(s.date));
  ds.samples = std::move(samples);
  return ds;
}

ImputationDefaults imputation_defaults(const std::vector<const features::WeatherSeries*>& series, const SplitRule& rule) {
  // sorted before summing so the result does not depend on file order
  std::vector<double> snow, albedo;
  for (const auto* s : series) {
    for (const auto& r : s->records()) {
      if (!rule.is_train_year(r.date.year())) continue;
      if (r.snow_cover) snow.push_back(*r.snow_cover);
      if (r.albedo) albedo.push_back(*r.albedo);
    }
  }
  auto mean = [](std::vector<double>& v, double fallback) {
    if (v.empty()) return fallback;
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  };
  ImputationDefaults d;
  d.snow_cover = mean(snow, d.snow_cover);
  d.albedo = mean(albedo, d.albedo);
  return d;
}

raster::Raster terrain_stack(const raster::Raster& dem) {
  if (dem.bands() != 1) throw ArgumentError("terrain_stack: DEM must have one band");
  const auto sa = features::slope_aspect(dem, dem.spec().cell_size);
  raster::Raster out(dem.spec(), 3);
  for (std::size_t r = 0; r < dem.rows(); ++r) {
    for (std::size_t c = 0; c < dem.cols(); ++c) {
      if (dem.is_nodata(r, c)) {
        out.set_nodata(r, c);
        continue;
      }
      out.set(0, r, c, dem.at(r, c));
      // derivatives are undefined at borders and on flats; those read as 0
      out.set(1, r, c, sa.slope.is_nodata(r, c) ? 0.0f : sa.slope.at(r, c));
      out.set(2, r, c, sa.aspect.is_nodata(r, c) ? 0.0f : sa.aspect.at(r, c));
    }
  }
  return out;
}

raster::Raster truth_inches(const raster::Raster& aso_meters, const raster::BasinMask& mask) {
  const double ratio = mask.spec().cell_size / aso_meters.spec().cell_size;
  const long factor = std::lround(ratio);
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9) {
    throw DimensionError("truth: ASO cell size " + text::format_double(aso_meters.spec().cell_size) +
                         " does not divide the prediction cell size " + text::format_double(mask.spec().cell_size));
  }
  auto agg = raster::aggregate_mean(aso_meters, factor);
  raster::require_same_grid(agg.spec(), mask.spec(), "aggregated ASO vs basin mask '" + mask.name() + "'");
  return raster::meters_to_inches(agg);
}

std::vector<CellSample> build_samples(const BasinInputs& basin, const raster::Raster& terrain, const SceneInputs& scene,
                                      const ImputationDefaults& defaults, std::size_t patch_size) {
  if (scene.sar.bands() != 2) throw ArgumentError("build_samples: SAR raster needs 2 bands (VV, VH)");
  if (scene.spectral.bands() != 5) throw ArgumentError("build_samples: spectral raster needs 5 bands");
  if (terrain.bands() != 3) throw ArgumentError("build_samples: terrain stack needs 3 bands");

  const auto sar = features::sar_composite(scene.sar.band(0), scene.sar.band(1));
  features::SpectralScene spec_scene;
  const features::SpectralBand order[] = {features::SpectralBand::B2, features::SpectralBand::B4,
                                          features::SpectralBand::B8, features::SpectralBand::B8A,
                                          features::SpectralBand::B12};
  for (std::size_t b = 0; b < 5; ++b) spec_scene.add(order[b], scene.spectral.band(b));
  const auto spectral = spec_scene.stacked();

  std::optional<raster::Raster> truth;
  if (scene.aso_meters) truth = truth_inches(*scene.aso_meters, basin.mask);

  const auto& grid = basin.mask.spec();
  const std::size_t p = patch_size;
  std::vector<CellSample> out;
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      if (!basin.mask.contains(r, c)) continue;
      if (truth && truth->is_nodata(r, c)) continue;
      const double x = grid.cell_center_x(c), y = grid.cell_center_y(r);

      const auto imputed = features::impute_modis(basin.weather(r, c), defaults.snow_cover, defaults.albedo);
      const auto window = features::weather_window(imputed.series, scene.date);
      const auto& recs = imputed.series.records();
      const auto it = std::lower_bound(recs.begin(), recs.end(), scene.date,
                                       [](const features::WeatherRecord& a, Date d) { return a.date < d; });
      const auto idx = static_cast<std::size_t>(it - recs.begin());

      CellSample s;
      s.terrain_patch = nn::Tensor::from({3, p, p}, features::extract_patch(terrain, x, y, p));
      s.sar_patch = nn::Tensor::from({3, p, p}, features::extract_patch(sar, x, y, p));
      s.spectral_patch = nn::Tensor::from({6, p, p}, features::extract_patch(spectral, x, y, p));
      s.weather_seq = nn::Tensor::from({features::kWeatherWindowDays, features::kWeatherFields},
                                       features::window_matrix(window));
      s.modis_valid = {static_cast<double>(imputed.snow_valid[idx]), static_cast<double>(imputed.albedo_valid[idx])};
      s.target_swe = truth ? static_cast<double>(truth->at(r, c)) : 0.0;
      s.basin = basin.mask.name();
      s.row = r;
      s.col = c;
      s.date = scene.date;
      out.push_back(std::move(s));
    }
  }
  return out;
}

// ------------------------------------------------------------ manifests

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  const auto lines = text::read_lines(path);
  const std::string src = path.string();
  if (lines.empty() || text::trim(lines[0]) != kManifestHeader) {
    throw ParseError(src + ": expected header '" + kManifestHeader + "'");
  }
  std::vector<ManifestRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split(lines[i], ',');
    const std::string where = src + " line " + std::to_string(i + 1);
    if (f.size() != 7) throw ParseError(where + ": expected 7 fields, got " + std::to_string(f.size()));
    ManifestRow r;
    r.basin = std::string(text::trim(f[0]));
    if (r.basin.empty()) throw ParseError(where + ": empty basin");
    try {
      r.date = Date::parse(std::string(text::trim(f[1])));
    } catch (const Error& e) {
      throw ParseError(where + ": date: " + e.what());
    }
    r.terrain_path = std::string(text::trim(f[2]));
    r.sar_path = std::string(text::trim(f[3]));
    r.spectral_path = std::string(text::trim(f[4]));
    r.weather_csv = std::string(text::trim(f[5]));
    r.aso_path = std::string(text::trim(f[6]));
    if (r.terrain_path.empty() || r.sar_path.empty() || r.spectral_path.empty() || r.weather_csv.empty()) {
      throw ParseError(where + ": only aso_path may be empty");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path) {
  std::string s = std::string(kManifestHeader) + "\n";
  for (const auto& r : rows) {
    s += r.basin + "," + r.date.iso() + "," + r.terrain_path + "," + r.sar_path + "," + r.spectral_path + "," +
         r.weather_csv + "," + r.aso_path + "\n";
  }
  text::write_file(path, s);
}

std::string weather_path(const std::string& pattern, std::size_t row, std::size_t col) {
  std::string out = pattern;
  for (const auto& [key, val] : {std::pair<std::string, std::size_t>{"{row}", row}, {"{col}", col}}) {
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key)) {
      out.replace(pos, key.size(), std::to_string(val));
    }
  }
  return out;
}

std::filesystem::path mask_path(const std::filesystem::path& dataset_dir, const std::string& basin) {
  return dataset_dir / "masks" / (basin + ".rstr");
}

Dataset load_dataset(const std::filesystem::path& manifest, const SplitRule& rule, std::size_t patch_size) {
  rule.validate();
  const auto dir = manifest.parent_path();
  const auto rows = read_manifest(manifest);
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : dir / fp;
  };

  struct BasinCache {
    std::optional<raster::BasinMask> mask;
    std::map<std::string, raster::Raster> terrain;  // by DEM path
  };
  std::map<std::string, BasinCache> basins;
  std::map<std::string, features::WeatherSeries> weather;  // by resolved path

  auto weather_for = [&](const std::string& file) -> const features::WeatherSeries& {
    auto it = weather.find(file);
    if (it == weather.end()) it = weather.emplace(file, features::read_weather_csv(file)).first;
    return it->second;
  };

  // Read every mask and weather file first: the imputation fallback is a
  // mean over all training-year observations.
  for (const auto& row : rows) {
    auto& b = basins[row.basin];
    if (!b.mask) b.mask = raster::read_basin_mask(mask_path(dir, row.basin), row.basin);
    const auto& g = b.mask->spec();
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        if (b.mask->contains(r, c)) weather_for(resolve(weather_path(row.weather_csv, r, c)).string());
      }
    }
  }
  std::vector<const features::WeatherSeries*> all;
  for (const auto& [k, v] : weather) all.push_back(&v);
  const auto defaults = imputation_defaults(all, rule);

  std::vector<CellSample> samples;
  for (const auto& row : rows) {
    auto& b = basins[row.basin];
    const auto tkey = resolve(row.terrain_path).string();
    auto tit = b.terrain.find(tkey);
    if (tit == b.terrain.end()) tit = b.terrain.emplace(tkey, terrain_stack(raster::read_raster(tkey))).first;

    BasinInputs basin{*b.mask, [&](std::size_t r, std::size_t c) -> const features::WeatherSeries& {
                        return weather_for(resolve(weather_path(row.weather_csv, r, c)).string());
                      }};
    SceneInputs scene{row.date, raster::read_raster(resolve(row.sar_path)), raster::read_raster(resolve(row.spectral_path)),
                      std::nullopt};
    if (!row.aso_path.empty()) scene.aso_meters = raster::read_raster(resolve(row.aso_path));
    auto part = build_samples(basin, tit->second, scene, defaults, patch_size);
    for (auto& s : part) samples.push_back(std::move(s));
  }
  return split_by_year(std::move(samples), rule);
}

}  // namespace snowfuse::train
