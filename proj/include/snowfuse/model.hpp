#ifndef SNOWFUSE_MODEL_HPP
#define SNOWFUSE_MODEL_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snowfuse/date.hpp"
#include "snowfuse/kv_config.hpp"
#include "snowfuse/nn/param_store.hpp"
#include "snowfuse/nn/tensor.hpp"

namespace snowfuse::model {

/// Input sources in concatenation order.
enum class Source { Terrain, Sar, Spectral, Modis, Weather };
inline constexpr std::array<Source, 5> kAllSources = {Source::Terrain, Source::Sar, Source::Spectral, Source::Modis,
                                                      Source::Weather};

std::string source_name(Source s);
/// Accepts terrain, sar, spectral, modis, weather. Throws ArgumentError otherwise.
Source parse_source(const std::string& name);

/// Where the MODIS fractions enter: as LSTM sequence columns or as scalars after fusion.
enum class ModisPlacement { Lstm, PostFusion };

inline constexpr std::size_t kTerrainChannels = 3;   // elevation, slope, aspect
inline constexpr std::size_t kSarChannels = 3;       // VV, VH, VV+VH
inline constexpr std::size_t kSpectralChannels = 6;  // geology trio, vegetation trio
inline constexpr std::size_t kModisColumns = 2;      // snow_cover, albedo
inline constexpr std::size_t kGridmetColumns = 5;    // precip, tmax, tmin, wind dir, wind vel

struct FusionConfig {
  std::array<bool, 5> enabled = {true, true, true, true, true};
  std::vector<std::size_t> terrain_widths = {8, 8};
  std::vector<std::size_t> sar_widths = {8, 12, 12};
  std::vector<std::size_t> spectral_widths = {8, 12, 12};
  std::size_t terrain_embed = 8;
  std::size_t sar_embed = 8;
  std::size_t spectral_embed = 8;
  std::size_t lstm_hidden = 8;
  std::array<std::size_t, 2> mlp_hidden = {32, 16};
  std::size_t patch_size = 16;
  std::size_t weather_steps = 11;
  ModisPlacement modis_placement = ModisPlacement::Lstm;

  bool uses(Source s) const { return enabled[static_cast<std::size_t>(s)]; }
  void set_enabled(Source s, bool on) { enabled[static_cast<std::size_t>(s)] = on; }

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  bool has_lstm() const;
  /// Columns of the LSTM input sequence.
  std::size_t sequence_features() const;
  /// Unencoded scalars appended after the embeddings.
  std::size_t static_features() const;
  /// Length of the fused vector fed to the MLP.
  std::size_t fusion_dim() const;

  /// Applies one `key=value`; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void apply(const kv::Entries& entries);
  /// Fully resolved configuration in the same key=value format.
  std::string to_text() const;
  static FusionConfig from_text(const std::vector<std::string>& lines, const std::string& source);
  static FusionConfig load(const std::filesystem::path& path);
};

/// Keys understood by FusionConfig::set, with one-line descriptions.
const std::vector<std::pair<std::string, std::string>>& fusion_config_keys();

/// The same architecture with only `source` enabled.
FusionConfig single_source_config(const FusionConfig& cfg, Source source);

/**
 * One 1 km cell on one date. Patches are raw (unscaled) values centred on
 * the cell; weather_seq holds the 11-day window in WeatherRecord column order
 * with MODIS gaps already imputed.
 */
struct CellSample {
  nn::Tensor terrain_patch;   // [3,P,P]
  nn::Tensor sar_patch;       // [3,P,P]
  nn::Tensor spectral_patch;  // [6,P,P]
  nn::Tensor weather_seq;     // [11,7]
  std::array<double, 2> modis_valid = {1.0, 1.0};  // target-day snow_cover / albedo observed
  double target_swe = 0.0;    // inches
  std::string basin;
  std::size_t row = 0;
  std::size_t col = 0;
  Date date;
};

/// Per-channel standardisation fitted on the training split.
struct FeatureScaler {
  std::vector<double> terrain_mean = std::vector<double>(kTerrainChannels, 0.0);
  std::vector<double> terrain_std = std::vector<double>(kTerrainChannels, 1.0);
  std::vector<double> sar_mean = std::vector<double>(kSarChannels, 0.0);
  std::vector<double> sar_std = std::vector<double>(kSarChannels, 1.0);
  std::vector<double> spectral_mean = std::vector<double>(kSpectralChannels, 0.0);
  std::vector<double> spectral_std = std::vector<double>(kSpectralChannels, 1.0);
  std::vector<double> weather_mean = std::vector<double>(kModisColumns + kGridmetColumns, 0.0);
  std::vector<double> weather_std = std::vector<double>(kModisColumns + kGridmetColumns, 1.0);
  double target_mean = 0.0;
  double target_std = 1.0;

  static FeatureScaler fit(std::span<const CellSample> samples);
  void store(nn::ParamStore& store) const;
  /// Identity scaler when the store carries no statistics.
  static FeatureScaler load(const nn::ParamStore& store);
};

/**
 * Late-fusion regressor: a depthwise-separable encoder for terrain, plain
 * conv encoders for SAR and optical imagery, an LSTM over the daily table,
 * concatenation with the unencoded scalars, and a three-layer MLP.
 */
class FusionModel {
 public:
  /// Random initialisation from `seed`; identity feature scaling.
  FusionModel(FusionConfig config, std::uint64_t seed);
  /// Wraps an existing parameter store; throws ShapeError if it does not match the config.
  FusionModel(FusionConfig config, nn::ParamStore params);

  const FusionConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  FeatureScaler scaler() const { return FeatureScaler::load(params_); }
  void set_scaler(const FeatureScaler& s);

  /// Fused vector: embeddings in concatenation order, then static scalars.
  nn::Tensor embed(const CellSample& sample) const;
  /// Standardised network output [1], recorded for backward when grad mode is on.
  nn::Tensor forward_standardized(const CellSample& sample) const;
  /// Prediction in inches (unclamped), computed without recording a graph.
  double predict(const CellSample& sample) const;

  /// Zeroes the output layer so the model starts at the target mean.
  void zero_output_layer();

 private:
  void build(std::uint64_t seed);
  void check_shapes() const;
  nn::Tensor encode_terrain(const nn::Tensor& x) const;
  nn::Tensor encode_standard(const std::string& prefix, std::size_t blocks, const nn::Tensor& x) const;

  FusionConfig config_;
  nn::ParamStore params_;
  FeatureScaler scaler_;
};

/// Prediction in inches.
double forward(const FusionModel& model, const CellSample& sample);

/**
 * Prediction of a separately trained single-source model. Throws
 * ArgumentError for unknown names or when `model` is not the single-source
 * model of that name.
 */
double forward_single_source(const FusionModel& model, const CellSample& sample, const std::string& source);

/// Writes `<stem>.ckpt` (FUSN1) and `<stem>.cfg` (key=value).
void save_model(const FusionModel& model, const std::filesystem::path& stem);
FusionModel load_model(const std::filesystem::path& stem);

}  // namespace snowfuse::model

#endif  // SNOWFUSE_MODEL_HPP
