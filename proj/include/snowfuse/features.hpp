#ifndef SNOWFUSE_FEATURES_HPP
#define SNOWFUSE_FEATURES_HPP

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snowfuse/date.hpp"
#include "snowfuse/raster.hpp"

namespace snowfuse::features {

using raster::Raster;

// ---------------------------------------------------------------- terrain

struct SlopeAspect {
  Raster slope;   // degrees, [0, 90]
  Raster aspect;  // degrees clockwise from north, direction of steepest descent
};

/**
 * Horn 3x3 finite differences. Border pixels and pixels whose window touches
 * nodata are nodata in both outputs; aspect is also nodata where the surface
 * is flat.
 */
SlopeAspect slope_aspect(const Raster& dem, double cell_size);

// --------------------------------------------------------------- band math

inline constexpr double kRatioEpsilon = 1e-9;

/// Elementwise (a - b) / (a + b); nodata where |a + b| < kRatioEpsilon.
Raster normalized_ratio(const Raster& a, const Raster& b);

/// Three bands: VV, VH, VV + VH.
Raster sar_composite(const Raster& vv, const Raster& vh);

/// Per-band min-max scaling of valid pixels onto [0, 1]. Constant bands map to 0.
Raster scene_minmax(const Raster& r);

enum class SpectralBand { B2, B4, B8, B8A, B12 };

/// Name used in files and messages ("B8A", ...). Throws ArgumentError on unknown names.
std::string band_name(SpectralBand b);
SpectralBand parse_band(const std::string& name);

/// Optical bands on one shared grid.
class SpectralScene {
 public:
  void add(SpectralBand band, Raster r);
  const Raster& get(SpectralBand band) const;
  bool has(SpectralBand band) const { return bands_.count(band) != 0; }

  /// B8A, B12 and their normalized ratio.
  Raster geology_trio() const;
  /// B2, B4 and the normalized ratio of B8 and B2.
  Raster vegetation_trio() const;
  /// Geology trio followed by vegetation trio (6 bands).
  Raster stacked() const;

 private:
  std::map<SpectralBand, Raster> bands_;
};

/// Stacks single-band rasters on one grid; the masks are OR-ed.
Raster stack_bands(std::span<const Raster> parts);

// ------------------------------------------------------------------ MODIS

/**
 * Mean of the unmasked pixels divided by the theoretical maximum, clamped
 * to [0, 1]. Empty when all four pixels are masked.
 */
std::optional<double> modis_tabular(const std::array<std::optional<double>, 4>& pixels, double theoretical_max);

// ---------------------------------------------------------------- weather

inline constexpr std::size_t kWeatherWindowDays = 11;
inline constexpr std::size_t kWeatherFields = 7;

/// One day of tabular inputs. MODIS-derived fractions may be missing (clouds).
struct WeatherRecord {
  Date date;
  std::optional<double> snow_cover;  // fraction
  std::optional<double> albedo;      // fraction
  double precip_total = 0.0;         // mm
  double temp_max = 0.0;             // deg C
  double temp_min = 0.0;             // deg C
  double wind_dir = 0.0;             // degrees [0, 360)
  double wind_vel = 0.0;             // m/s

  /// Fields in canonical column order; missing fractions become NaN.
  std::array<double, kWeatherFields> row() const;
};

class WeatherSeries {
 public:
  WeatherSeries() = default;
  /// Throws ArgumentError on non-increasing dates or out-of-range fields.
  explicit WeatherSeries(std::vector<WeatherRecord> records);

  const std::vector<WeatherRecord>& records() const { return records_; }
  const WeatherRecord* find(Date d) const;
  bool empty() const { return records_.empty(); }

 private:
  std::vector<WeatherRecord> records_;
};

inline constexpr const char* kWeatherCsvHeader =
    "date,snow_cover,albedo,precip_total,temp_max,temp_min,wind_dir,wind_vel";

WeatherSeries read_weather_csv(const std::filesystem::path& path);
void write_weather_csv(const WeatherSeries& series, const std::filesystem::path& path);
std::string format_weather_csv(const WeatherSeries& series);
WeatherSeries parse_weather_csv(const std::vector<std::string>& lines, const std::string& source);

/**
 * The target day and the ten days before it, oldest first. Throws GapError
 * listing every missing date.
 */
std::vector<WeatherRecord> weather_window(const WeatherSeries& series, Date target);

/// 11 x 7 row-major matrix of a window, NaN where a MODIS value is missing.
std::vector<double> window_matrix(std::span<const WeatherRecord> window);

/// Series with MODIS gaps filled plus per-record validity flags.
struct ImputedSeries {
  WeatherSeries series;
  std::vector<std::uint8_t> snow_valid;
  std::vector<std::uint8_t> albedo_valid;
};

/**
 * Fills missing snow_cover/albedo with the most recent valid value at most
 * `max_lookback_days` earlier, else with the supplied fallback mean.
 */
ImputedSeries impute_modis(const WeatherSeries& series, double fallback_snow, double fallback_albedo,
                           long max_lookback_days = 7);

// ---------------------------------------------------------------- patches

/**
 * Extracts a size x size window of every band centred on map point (x, y).
 * Result is band-major, row-major doubles; nodata and out-of-bounds pixels
 * read as 0.
 */
std::vector<double> extract_patch(const Raster& r, double center_x, double center_y, std::size_t size);

}  // namespace snowfuse::features

#endif  // SNOWFUSE_FEATURES_HPP
