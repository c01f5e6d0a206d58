#ifndef SNOWFUSE_TRAIN_HPP
#define SNOWFUSE_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snowfuse/date.hpp"
#include "snowfuse/features.hpp"
#include "snowfuse/kv_config.hpp"
#include "snowfuse/model.hpp"
#include "snowfuse/raster.hpp"

namespace snowfuse::train {

using model::CellSample;

enum class Split { Train, Val, Test };
std::string split_name(Split s);

/// Calendar-year assignment of samples to splits.
struct SplitRule {
  std::vector<int> train_years = {2016, 2017, 2018, 2019};
  std::vector<int> val_years = {};
  std::vector<int> test_years = {2022};

  /// Throws ConfigError if the year lists overlap or train is empty.
  void validate() const;
  /// Throws UnassignedYearError for a year in no list.
  Split assign(Date d) const;
  bool is_train_year(int year) const;
};

struct Dataset {
  std::vector<CellSample> samples;
  std::vector<Split> splits;

  std::vector<std::size_t> indices(Split s) const;
  std::vector<CellSample> subset(Split s) const;
  std::size_t count(Split s) const { return indices(s).size(); }
};

Dataset split_by_year(std::vector<CellSample> samples, const SplitRule& rule);

// ------------------------------------------------------------ assembly

/// Means substituted for MODIS gaps that have no valid value in the last 7 days.
struct ImputationDefaults {
  double snow_cover = 0.5;
  double albedo = 0.5;
};

/// Mean of every observed snow_cover / albedo value in training years.
ImputationDefaults imputation_defaults(const std::vector<const features::WeatherSeries*>& series, const SplitRule& rule);

/// Static per-basin inputs: the prediction grid and per-cell weather.
struct BasinInputs {
  raster::BasinMask mask;
  /// Weather series for a 1 km cell (row, col of the mask grid).
  std::function<const features::WeatherSeries&(std::size_t, std::size_t)> weather;
};

/// Time-varying inputs of one basin on one date.
struct SceneInputs {
  Date date;
  raster::Raster sar;       // 2 bands: VV, VH (dB)
  raster::Raster spectral;  // 5 bands: B2, B4, B8, B8A, B12 (reflectance)
  std::optional<raster::Raster> aso_meters;  // 50 m SWE in meters
};

/// Terrain channels (elevation, slope, aspect) derived once per basin.
raster::Raster terrain_stack(const raster::Raster& dem);

/// ASO meters -> 1 km block mean in inches on the mask grid.
raster::Raster truth_inches(const raster::Raster& aso_meters, const raster::BasinMask& mask);

/**
 * One CellSample per basin cell with a valid target (or every basin cell
 * when the scene has no ASO raster; targets are then 0). All inputs flow
 * through the feature pipeline: Horn slope/aspect, SAR composite, band
 * ratios, MODIS imputation and 11-day weather windows.
 */
std::vector<CellSample> build_samples(const BasinInputs& basin, const raster::Raster& terrain, const SceneInputs& scene,
                                      const ImputationDefaults& defaults, std::size_t patch_size);

// ------------------------------------------------------------ manifests

inline constexpr const char* kManifestHeader = "basin,date,terrain_path,sar_path,spectral_path,weather_csv,aso_path";

struct ManifestRow {
  std::string basin;
  Date date;
  std::string terrain_path;
  std::string sar_path;
  std::string spectral_path;
  std::string weather_csv;  // may contain {row} and {col} placeholders
  std::string aso_path;     // may be empty for prediction-only rows
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);

/// Expands {row}/{col} in a weather path pattern.
std::string weather_path(const std::string& pattern, std::size_t row, std::size_t col);

/// Basin mask location convention: `<dataset dir>/masks/<basin>.rstr`.
std::filesystem::path mask_path(const std::filesystem::path& dataset_dir, const std::string& basin);

/**
 * Loads every manifest row, reading rasters and weather CSVs relative to the
 * manifest directory, and assembles split-tagged samples. Missing files
 * raise IoError naming the path.
 */
Dataset load_dataset(const std::filesystem::path& manifest, const SplitRule& rule, std::size_t patch_size);

// ------------------------------------------------------------ training

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_steps = 2000;
  std::size_t eval_every = 100;
  std::uint64_t seed = 7;
  std::size_t patience = 10;    // evaluations without val improvement
  double target_train_rmse = 0.0;  // stop once train RMSE falls below (0 = off)
  bool zero_init_head = true;
  SplitRule split;

  void validate() const;
  void set(const std::string& key, const std::string& value);
  void apply(const kv::Entries& entries);
  std::string to_text() const;
};

const std::vector<std::pair<std::string, std::string>>& train_config_keys();

struct HistoryRow {
  std::size_t step = 0;
  double train_rmse = 0.0;
  std::optional<double> val_rmse;
};

std::string format_history_csv(const std::vector<HistoryRow>& rows);

struct TrainResult {
  model::FusionModel best;   // best validation RMSE (final model without a val split)
  model::FusionModel last;   // state after the final step, resumable
  std::vector<HistoryRow> history;
  std::size_t best_step = 0;
  std::size_t steps_run = 0;
};

/// Unclamped RMSE in inches of `model` over `samples`.
double rmse_over(const model::FusionModel& model, const std::vector<CellSample>& samples);

/// Dataset indices of the batch consumed at `step`; a pure function of (seed, step).
std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed, std::size_t step);

/**
 * Minibatch MSE training with Adam. A fresh model is initialised from
 * train_cfg.seed, with feature statistics fitted on the training split.
 * Passing `resume` continues from its Adam step count; given identical
 * inputs the result is bit-identical to an uninterrupted run.
 * Throws NumericalError naming the step when the loss stops being finite.
 */
TrainResult train_model(const Dataset& dataset, const model::FusionConfig& model_cfg, const TrainConfig& train_cfg,
                        std::optional<model::FusionModel> resume = std::nullopt);

}  // namespace snowfuse::train

#endif  // SNOWFUSE_TRAIN_HPP
