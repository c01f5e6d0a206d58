#ifndef SNOWFUSE_SYNTH_HPP
#define SNOWFUSE_SYNTH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "snowfuse/date.hpp"
#include "snowfuse/eval.hpp"
#include "snowfuse/features.hpp"
#include "snowfuse/kv_config.hpp"
#include "snowfuse/raster.hpp"
#include "snowfuse/train.hpp"

namespace snowfuse::synth {

/// Imagery and DEM pixel size; 10 pixels per 1 km cell.
inline constexpr double kImageryCell = 100.0;
/// ASO pixel size; 20 x 20 pixels per cell.
inline constexpr double kAsoCell = 50.0;
inline constexpr double kGridCell = 1000.0;
/// Imagery pixels kept around the basin grid so edge patches stay in bounds.
inline constexpr std::size_t kImageryMargin = 3;

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t basin_count = 3;
  std::size_t grid_rows = 10;
  std::size_t grid_cols = 10;
  double terrain_roughness = 5.0;  // m, pixel-scale DEM noise
  double w_elev = 1.0;
  double w_ratio = 1.0;
  double w_sar = 1.0;
  double w_precip = 1.0;
  double w_modis = 1.0;
  double intercept = 0.0;    // inches
  double noise_std = 0.0;    // inches
  std::size_t station_count = 3;  // per basin
  double cloud_fraction = 0.15;   // chance a MODIS day is fully masked
  std::size_t patch_size = 16;
  std::vector<Date> dates = default_dates();

  static std::vector<Date> default_dates();

  /// Throws ConfigError for negative weights, no positive weight, noise < 0, empty dates and similar.
  /// Grids under 4 x 4 are rejected by generate_scene with ArgumentError.
  void validate() const;
  void set(const std::string& key, const std::string& value);
  void apply(const kv::Entries& entries);
  std::string to_text() const;
};

const std::vector<std::pair<std::string, std::string>>& synth_config_keys();

/// "default", "sierra-like" (SWE mean ~4, std ~7 inches) or "overfit" (small, noise-free).
SynthConfig preset(const std::string& name);

/// Raw inputs of one basin, as they are written to disk.
struct BasinWorld {
  raster::BasinMask mask;
  raster::Raster dem;                             // 100 m, meters
  std::vector<features::WeatherSeries> weather;   // per grid cell, row-major; empty outside the mask
  std::vector<Date> dates;
  std::vector<raster::Raster> sar;       // per date, VV/VH dB at 100 m
  std::vector<raster::Raster> spectral;  // per date, B2 B4 B8 B8A B12 at 100 m
  std::vector<raster::Raster> aso;       // per date, SWE meters at 50 m
  std::vector<raster::Raster> truth;     // per date, SWE inches on the mask grid
};

/// Standardised latent factors of one sample: elevation, ratio, SAR, precipitation, MODIS.
using Latents = std::array<double, 5>;

struct SynthScene {
  SynthConfig config;
  std::vector<BasinWorld> basins;
  train::Dataset dataset;
  std::vector<Latents> latents;  // aligned with dataset.samples
  eval::StationSet stations;
};

/**
 * Deterministic synthetic basins. Samples are assembled through the same
 * code path as files on disk; each latent factor is a standardised statistic
 * of one source's model-visible inputs, and SWE in inches is
 * max(0, intercept + sum(w * latent) + noise).
 */
SynthScene generate_scene(const SynthConfig& cfg, const train::SplitRule& rule = {});

/**
 * Writes manifest.csv, masks/, terrain/, sar/, spectral/, aso/, weather/,
 * stations.csv and synth.cfg under `dir`.
 */
void write_dataset(const SynthScene& scene, const std::filesystem::path& dir);

/// Basin names used by the generator, in order.
std::string basin_name(std::size_t index);

/// The published results table: nine basins (areas in km2), SWE statistics, RMSEs and baselines.
eval::EvalReport inject_table2();

}  // namespace snowfuse::synth

#endif  // SNOWFUSE_SYNTH_HPP
