#include <cmath>

#include "snowfuse/error.hpp"
#include "snowfuse/synth.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::synth {

std::vector<Date> SynthConfig::default_dates() {
  std::vector<Date> d;
  for (int y = 2016; y <= 2019; ++y) {
    d.emplace_back(y, 3, 1);
    d.emplace_back(y, 3, 20);
    d.emplace_back(y, 4, 10);
  }
  d.emplace_back(2022, 3, 20);
  d.emplace_back(2022, 4, 10);
  return d;
}

void SynthConfig::validate() const {
  const double w[] = {w_elev, w_ratio, w_sar, w_precip, w_modis};
  std::size_t positive = 0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("synth: signal weights must be finite and >= 0");
    if (x > 0.0) ++positive;
  }
  // a single positive weight is allowed for degenerate single-factor scenes
  if (positive == 0) throw ConfigError("synth: at least one signal weight must be positive");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("synth: noise_std must be >= 0");
  if (!std::isfinite(intercept)) throw ConfigError("synth: intercept must be finite");
  if (!(terrain_roughness >= 0.0)) throw ConfigError("synth: terrain_roughness must be >= 0");
  if (!(cloud_fraction >= 0.0 && cloud_fraction <= 1.0)) throw ConfigError("synth: cloud_fraction must lie in [0, 1]");
  if (basin_count == 0) throw ConfigError("synth: basin_count must be positive");
  if (patch_size < 4) throw ConfigError("synth: patch_size must be >= 4");
  if (patch_size > 2 * kImageryMargin + static_cast<std::size_t>(kGridCell / kImageryCell)) {
    throw ConfigError("synth: patch_size exceeds the imagery margin (max " +
                      std::to_string(2 * kImageryMargin + static_cast<std::size_t>(kGridCell / kImageryCell)) + ")");
  }
  if (dates.empty()) throw ConfigError("synth: no dates");
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) throw ConfigError("synth: dates must be strictly increasing");
  }
}

const std::vector<std::pair<std::string, std::string>>& synth_config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"seed", "generator seed"},
      {"basin_count", "number of basins"},
      {"grid_rows", "basin grid rows (1 km cells, >= 4)"},
      {"grid_cols", "basin grid columns (1 km cells, >= 4)"},
      {"terrain_roughness", "pixel-scale DEM noise in meters"},
      {"w_elev", "SWE weight of the elevation factor"},
      {"w_ratio", "SWE weight of the B8A/B12 ratio factor"},
      {"w_sar", "SWE weight of the VV+VH factor"},
      {"w_precip", "SWE weight of the 11-day precipitation factor"},
      {"w_modis", "SWE weight of the MODIS snow cover factor"},
      {"intercept", "SWE intercept in inches before clipping at 0"},
      {"noise_std", "SWE noise std in inches"},
      {"station_count", "stations per basin"},
      {"cloud_fraction", "probability that a MODIS day is fully clouded"},
      {"patch_size", "patch side in 100 m pixels"},
      {"dates", "scene dates, comma-separated YYYY-MM-DD"},
  };
  return keys;
}

void SynthConfig::set(const std::string& key, const std::string& v) {
  if (key == "seed") {
    seed = kv::parse_size(key, v);
  } else if (key == "basin_count") {
    basin_count = kv::parse_size(key, v);
  } else if (key == "grid_rows") {
    grid_rows = kv::parse_size(key, v);
  } else if (key == "grid_cols") {
    grid_cols = kv::parse_size(key, v);
  } else if (key == "terrain_roughness") {
    terrain_roughness = kv::parse_real(key, v);
  } else if (key == "w_elev") {
    w_elev = kv::parse_real(key, v);
  } else if (key == "w_ratio") {
    w_ratio = kv::parse_real(key, v);
  } else if (key == "w_sar") {
    w_sar = kv::parse_real(key, v);
  } else if (key == "w_precip") {
    w_precip = kv::parse_real(key, v);
  } else if (key == "w_modis") {
    w_modis = kv::parse_real(key, v);
  } else if (key == "intercept") {
    intercept = kv::parse_real(key, v);
  } else if (key == "noise_std") {
    noise_std = kv::parse_real(key, v);
  } else if (key == "station_count") {
    station_count = kv::parse_size(key, v);
  } else if (key == "cloud_fraction") {
    cloud_fraction = kv::parse_real(key, v);
  } else if (key == "patch_size") {
    patch_size = kv::parse_size(key, v);
  } else if (key == "dates") {
    dates.clear();
    for (const auto& part : text::split(v, ',')) {
      try {
        dates.push_back(Date::parse(std::string(text::trim(part))));
      } catch (const Error& e) {
        throw ConfigError("key 'dates': " + std::string(e.what()));
      }
    }
  } else {
    throw ConfigError("unknown synth config key '" + key + "'");
  }
}

void SynthConfig::apply(const kv::Entries& entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

std::string SynthConfig::to_text() const {
  std::string s;
  s += "seed=" + std::to_string(seed) + "\n";
  s += "basin_count=" + std::to_string(basin_count) + "\n";
  s += "grid_rows=" + std::to_string(grid_rows) + "\n";
  s += "grid_cols=" + std::to_string(grid_cols) + "\n";
  s += "terrain_roughness=" + text::format_double(terrain_roughness) + "\n";
  s += "w_elev=" + text::format_double(w_elev) + "\n";
  s += "w_ratio=" + text::format_double(w_ratio) + "\n";
  s += "w_sar=" + text::format_double(w_sar) + "\n";
  s += "w_precip=" + text::format_double(w_precip) + "\n";
  s += "w_modis=" + text::format_double(w_modis) + "\n";
  s += "intercept=" + text::format_double(intercept) + "\n";
  s += "noise_std=" + text::format_double(noise_std) + "\n";
  s += "station_count=" + std::to_string(station_count) + "\n";
  s += "cloud_fraction=" + text::format_double(cloud_fraction) + "\n";
  s += "patch_size=" + std::to_string(patch_size) + "\n";
  s += "dates=";
  for (std::size_t i = 0; i < dates.size(); ++i) s += (i ? "," : "") + dates[i].iso();
  return s + "\n";
}

SynthConfig preset(const std::string& name) {
  SynthConfig c;
  if (name == "default") return c;
  if (name == "sierra-like") {
    c.basin_count = 4;
    c.w_elev = c.w_ratio = c.w_sar = c.w_precip = c.w_modis = 6.3;
    c.intercept = -3.7;
    c.noise_std = 1.0;
    return c;
  }
  if (name == "overfit") {
    c.basin_count = 1;
    c.grid_rows = c.grid_cols = 6;
    c.w_elev = c.w_ratio = c.w_sar = c.w_precip = c.w_modis = 2.0;
    c.intercept = 3.0;
    c.noise_std = 0.0;
    c.station_count = 1;
    c.dates = {Date(2016, 3, 1), Date(2016, 3, 20)};
    return c;
  }
  throw ConfigError("unknown synth preset '" + name + "' (expected default, sierra-like or overfit)");
}

eval::EvalReport inject_table2() {
  struct Row {
    const char* name;
    double area_thousand_km2, mean, sd, rmse;
  };
  static const Row rows[] = {
      {"Feather", 8.4, 1.2, 3.7, 2.7},  {"Yuba", 2.2, 5.8, 8.8, 7.0},          {"Truckee", 2.9, 7.4, 8.8, 9.4},
      {"Carson", 1.5, 6.8, 8.5, 7.3},   {"Tuolumne", 2.9, 5.6, 9.1, 9.5},      {"Merced", 1.7, 7.2, 7.6, 5.8},
      {"San Joaquin", 4.2, 6.3, 8.7, 7.6}, {"Kings Canyon", 3.5, 8.0, 7.7, 17.5}, {"Kaweah", 1.5, 3.1, 7.7, 5.1},
  };
  eval::EvalReport r;
  std::vector<eval::AreaRmse> ar;
  for (const auto& row : rows) {
    const double area = row.area_thousand_km2 * 1000.0;
    r.rows.push_back({row.name, area, row.mean, row.sd, row.rmse});
    ar.push_back({area, row.rmse});
    r.overall_area_km2 += area;
  }
  r.overall_rmse = eval::area_weighted_overall(ar);
  r.overall_swe_mean = 4.0;
  r.overall_swe_std = 7.0;
  r.zero_pred = 8.7;
  r.mean_pred = 13.0;
  r.snotel = 8.7;
  return r;
}

}  // namespace snowfuse::synth
