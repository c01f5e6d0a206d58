#ifndef SNOWFUSE_EVAL_HPP
#define SNOWFUSE_EVAL_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snowfuse/date.hpp"
#include "snowfuse/raster.hpp"

namespace snowfuse::eval {

using raster::BasinMask;
using raster::GridSpec;
using raster::Raster;

// ------------------------------------------------------------------ RMSE

/// A prediction raster and the truth it is scored against.
struct ScoredPair {
  const Raster* pred;
  const Raster* truth;
};

/**
 * Root mean square error over cells inside `mask` that are valid in both
 * rasters. Predictions are clamped at 0 first. Throws GridMismatchError or
 * EmptyEvaluationError.
 */
double rmse(const Raster& pred, const Raster& truth, const BasinMask& mask);
/// Same, pooled over several dates of one basin.
double rmse_pooled(std::span<const ScoredPair> pairs, const BasinMask& mask);

struct AreaRmse {
  double area_km2 = 0.0;
  double rmse = 0.0;
};

/// Sum(area * rmse) / Sum(area). Throws ArgumentError on empty input or non-positive areas.
double area_weighted_overall(std::span<const AreaRmse> rows);

double baseline_zero(const Raster& truth, const BasinMask& mask);
double baseline_mean(double train_mean, const Raster& truth, const BasinMask& mask);

// -------------------------------------------------------------- stations

struct Station {
  long long id = 0;
  double x = 0.0;
  double y = 0.0;
  double elevation = 0.0;
  std::map<Date, double> swe_by_date;  // inches
};

class StationSet {
 public:
  /// Throws ArgumentError on a duplicate id.
  void add(Station s);
  const std::vector<Station>& stations() const { return stations_; }
  Station& get(long long id);
  bool empty() const { return stations_.empty(); }
  /// Stations with a reading on `d`, in id order.
  std::vector<const Station*> reporting(Date d) const;

 private:
  std::vector<Station> stations_;  // kept sorted by id
};

inline constexpr const char* kStationCsvHeader = "id,x,y,elevation,date,swe";

/// One row per reading; a station without readings has empty date and swe fields.
std::string format_stations_csv(const StationSet& set);
StationSet parse_stations_csv(const std::vector<std::string>& lines, const std::string& source);
StationSet read_stations_csv(const std::filesystem::path& path);
void write_stations_csv(const StationSet& set, const std::filesystem::path& path);

/**
 * Every cell takes the reading of the Euclidean-nearest reporting station,
 * measured from the cell centre in map coordinates; ties go to the lowest id.
 * Throws NoDataError when no station reports on `d`.
 */
Raster nearest_station_field(const StationSet& stations, Date d, const GridSpec& grid);
double baseline_nearest_station(const StationSet& stations, Date d, const Raster& truth, const BasinMask& mask);

// ------------------------------------------------------------- smoothing

enum class SmoothBoundary {
  Renormalize,  // weights rescaled over the valid in-bounds support
  Periodic,     // indices wrap around; used to check mean preservation
};

/// Normalized 1-D Gaussian weights, radius ceil(3 sigma). Throws ArgumentError unless sigma > 0.
std::vector<double> gaussian_kernel(double sigma);

/// Double-precision smoothed values, row-major, NaN at nodata cells.
std::vector<double> gaussian_smooth_values(const Raster& pred, double sigma,
                                           SmoothBoundary boundary = SmoothBoundary::Renormalize);
/// Separable Gaussian smoothing of a single-band raster; nodata cells stay nodata.
Raster gaussian_smooth(const Raster& pred, double sigma, SmoothBoundary boundary = SmoothBoundary::Renormalize);

// ----------------------------------------------------------------- loess

struct CurvePoint {
  double x = 0.0;
  double fitted = 0.0;
};

/**
 * Local linear fit with tricube weights over the ceil(span * n) nearest
 * points, evaluated at `points` evenly spaced x values across the range of
 * `truth`. Throws ArgumentError on bad lengths, span or constant x.
 */
std::vector<CurvePoint> loess_error_curve(std::span<const double> truth, std::span<const double> errors,
                                          double span = 0.3, std::size_t points = 100);

std::string format_curve_csv(std::span<const CurvePoint> curve);
std::vector<CurvePoint> parse_curve_csv(const std::vector<std::string>& lines, const std::string& source);

// ---------------------------------------------------------------- report

struct ReportRow {
  std::string basin;
  double area_km2 = 0.0;
  double swe_mean = 0.0;
  double swe_std = 0.0;
  double rmse = 0.0;
  bool operator==(const ReportRow&) const = default;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, double>> absent;  // basins without truth, with area
  double overall_area_km2 = 0.0;
  double overall_swe_mean = 0.0;
  double overall_swe_std = 0.0;
  double overall_rmse = 0.0;
  std::optional<double> zero_pred;
  std::optional<double> mean_pred;
  std::optional<double> snotel;

  bool operator==(const EvalReport&) const = default;
};

/// One basin's predictions and truths, date-aligned. Empty truths mark the basin absent.
struct BasinEvaluation {
  BasinMask mask;
  std::vector<Date> dates;
  std::vector<Raster> predictions;
  std::vector<Raster> truths;
};

struct BaselineInputs {
  std::optional<double> train_mean;
  const StationSet* stations = nullptr;
};

/**
 * Per-basin rows (truth statistics over masked valid cells, pooled RMSE),
 * area-weighted overall and, when inputs allow, the three baseline rows
 * aggregated the same way.
 */
EvalReport build_report(const std::vector<BasinEvaluation>& basins, const BaselineInputs& baselines = {});

/// CSV `basin,area_km2,swe_mean,swe_std,rmse` with Overall and baseline rows.
std::string format_report_csv(const EvalReport& r);
EvalReport parse_report_csv(const std::vector<std::string>& lines, const std::string& source);
EvalReport read_report_csv(const std::filesystem::path& path);
/// Fixed-width text table with one decimal, laid out like the paper's results table.
std::string format_report_table(const EvalReport& r);

}  // namespace snowfuse::eval

#endif  // SNOWFUSE_EVAL_HPP
