// Pipeline stages shared by the command-line tool and the acceptance suite.
#ifndef SNOWFUSE_TOOLS_PIPELINE_HPP
#define SNOWFUSE_TOOLS_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snowfuse/eval.hpp"
#include "snowfuse/model.hpp"
#include "snowfuse/train.hpp"

namespace snowfuse::pipeline {

/// Worker cap from SNOWFUSE_THREADS (default 1). Throws ConfigError on a malformed value.
std::size_t thread_count();

/**
 * Runs fn(0..n-1) on up to `threads` workers. Results must be written to
 * per-index slots; the first failing index (lowest) is rethrown.
 */
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Basin masks named in the manifest, read from `<dir>/masks/`.
std::map<std::string, raster::BasinMask> load_masks(const std::filesystem::path& manifest);

/// One basin-date of predictions, with the truth implied by the sample targets.
struct PredictionItem {
  std::string basin;
  Date date;
  raster::Raster pred;
  raster::Raster truth;
};

/// Predictions for every (basin, date) of a split, in manifest order. No split means all samples.
std::vector<PredictionItem> predict_items(const model::FusionModel& model, const train::Dataset& data,
                                          const std::map<std::string, raster::BasinMask>& masks,
                                          std::optional<train::Split> split, std::size_t threads);

/// File name used for a basin-date raster: spaces become underscores.
std::string item_file(const std::string& basin, Date d);

/// Mean target over the training split.
double train_mean(const train::Dataset& data);

/// EvalReport over prediction items. Basins without items are listed as absent.
eval::EvalReport score_items(const std::vector<PredictionItem>& items,
                             const std::map<std::string, raster::BasinMask>& masks,
                             const eval::BaselineInputs& baselines = {});

/// Cells behind the error-vs-SWE diagnostic: truth and clamped prediction minus truth.
struct ErrorPoints {
  std::vector<double> truth;
  std::vector<double> error;
};
ErrorPoints error_points(const std::vector<PredictionItem>& items, const std::map<std::string, raster::BasinMask>& masks);
std::string format_points_csv(const ErrorPoints& p);
ErrorPoints parse_points_csv(const std::vector<std::string>& lines, const std::string& source);

struct AblationRow {
  std::string source;   // terrain, sar, spectral, modis, weather or all
  std::string encoder;  // encoder family feeding the head
  std::vector<double> rmse;  // per seed
  double mean = 0.0;
};

/**
 * Trains the five single-source models and the fused model for every seed
 * and scores each on the test split (area-weighted overall RMSE).
 */
std::vector<AblationRow> run_ablation(const train::Dataset& data, const std::map<std::string, raster::BasinMask>& masks,
                                      const model::FusionConfig& model_cfg, const train::TrainConfig& train_cfg,
                                      const std::vector<std::uint64_t>& seeds, std::size_t threads);
std::string format_ablation_csv(const std::vector<AblationRow>& rows, const std::vector<std::uint64_t>& seeds);

/// Per-basin RMSE bars with the overall and baseline rows.
std::string rmse_bars_svg(const eval::EvalReport& report);
/// Error-vs-truth scatter with the fitted Loess line.
std::string error_scatter_svg(const ErrorPoints& points, const std::vector<eval::CurvePoint>& curve);

}  // namespace snowfuse::pipeline

#endif  // SNOWFUSE_TOOLS_PIPELINE_HPP
