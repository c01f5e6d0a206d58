#include "snowfuse/error.hpp"
#include "snowfuse/model.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::model {

std::string source_name(Source s) {
  switch (s) {
    case Source::Terrain: return "terrain";
    case Source::Sar: return "sar";
    case Source::Spectral: return "spectral";
    case Source::Modis: return "modis";
    case Source::Weather: return "weather";
  }
  throw ArgumentError("unknown source");
}

Source parse_source(const std::string& name) {
  for (auto s : kAllSources) {
    if (source_name(s) == name) return s;
  }
  throw ArgumentError("unknown source '" + name + "' (expected terrain, sar, spectral, modis or weather)");
}

void FusionConfig::validate() const {
  bool any = false;
  for (bool e : enabled) any = any || e;
  if (!any) throw ConfigError("FusionConfig: at least one source must be enabled");
  if (terrain_widths.size() != 2) throw ConfigError("FusionConfig: terrain_widths needs exactly 2 stages");
  if (sar_widths.size() != 3) throw ConfigError("FusionConfig: sar_widths needs exactly 3 stages");
  if (spectral_widths.size() != 3) throw ConfigError("FusionConfig: spectral_widths needs exactly 3 stages");
  for (const auto* list : {&terrain_widths, &sar_widths, &spectral_widths}) {
    for (auto w : *list) {
      if (w == 0) throw ConfigError("FusionConfig: encoder widths must be positive");
    }
  }
  if (terrain_embed == 0 || sar_embed == 0 || spectral_embed == 0 || lstm_hidden == 0) {
    throw ConfigError("FusionConfig: embedding dims must be positive");
  }
  if (mlp_hidden[0] == 0 || mlp_hidden[1] == 0) throw ConfigError("FusionConfig: mlp_hidden widths must be positive");
  if (patch_size < 4) throw ConfigError("FusionConfig: patch_size must be >= 4");
  if (weather_steps != 11) throw ConfigError("FusionConfig: weather_steps must be 11 (target day + 10 preceding)");
}

bool FusionConfig::has_lstm() const { return sequence_features() > 0; }

std::size_t FusionConfig::sequence_features() const {
  std::size_t f = uses(Source::Weather) ? kGridmetColumns : 0;
  if (uses(Source::Modis) && modis_placement == ModisPlacement::Lstm) f += kModisColumns;
  return f;
}

std::size_t FusionConfig::static_features() const {
  if (!uses(Source::Modis)) return 0;
  return modis_placement == ModisPlacement::PostFusion ? 2 * kModisColumns : kModisColumns;
}

std::size_t FusionConfig::fusion_dim() const {
  std::size_t d = 0;
  if (uses(Source::Terrain)) d += terrain_embed;
  if (uses(Source::Sar)) d += sar_embed;
  if (uses(Source::Spectral)) d += spectral_embed;
  if (has_lstm()) d += lstm_hidden;
  return d + static_features();
}

const std::vector<std::pair<std::string, std::string>>& fusion_config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"use_terrain", "enable the terrain (DEM, slope, aspect) encoder [bool]"},
      {"use_sar", "enable the SAR (VV, VH, VV+VH) encoder [bool]"},
      {"use_spectral", "enable the optical (geology + vegetation trios) encoder [bool]"},
      {"use_modis", "enable MODIS snow cover / albedo inputs [bool]"},
      {"use_weather", "enable the daily weather LSTM [bool]"},
      {"terrain_widths", "channels of the 2 depthwise-separable terrain blocks [list]"},
      {"sar_widths", "channels of the 3 SAR conv blocks [list]"},
      {"spectral_widths", "channels of the 3 optical conv blocks [list]"},
      {"terrain_embed", "terrain embedding size"},
      {"sar_embed", "SAR embedding size"},
      {"spectral_embed", "optical embedding size"},
      {"lstm_hidden", "LSTM hidden size (weather embedding size)"},
      {"mlp_hidden", "widths of the two hidden MLP layers [list of 2]"},
      {"patch_size", "image patch side in pixels"},
      {"weather_steps", "days in the weather window (must be 11)"},
      {"modis_placement", "lstm | post_fusion"},
  };
  return keys;
}

void FusionConfig::set(const std::string& key, const std::string& v) {
  auto source_key = [&](Source s) { return "use_" + source_name(s); };
  for (auto s : kAllSources) {
    if (key == source_key(s)) {
      set_enabled(s, kv::parse_bool(key, v));
      return;
    }
  }
  if (key == "terrain_widths") {
    terrain_widths = kv::parse_size_list(key, v);
  } else if (key == "sar_widths") {
    sar_widths = kv::parse_size_list(key, v);
  } else if (key == "spectral_widths") {
    spectral_widths = kv::parse_size_list(key, v);
  } else if (key == "terrain_embed") {
    terrain_embed = kv::parse_size(key, v);
  } else if (key == "sar_embed") {
    sar_embed = kv::parse_size(key, v);
  } else if (key == "spectral_embed") {
    spectral_embed = kv::parse_size(key, v);
  } else if (key == "lstm_hidden") {
    lstm_hidden = kv::parse_size(key, v);
  } else if (key == "mlp_hidden") {
    const auto list = kv::parse_size_list(key, v);
    if (list.size() != 2) throw ConfigError("mlp_hidden: exactly two hidden widths required (3 affine layers)");
    mlp_hidden = {list[0], list[1]};
  } else if (key == "patch_size") {
    patch_size = kv::parse_size(key, v);
  } else if (key == "weather_steps") {
    weather_steps = kv::parse_size(key, v);
  } else if (key == "modis_placement") {
    if (v == "lstm") {
      modis_placement = ModisPlacement::Lstm;
    } else if (v == "post_fusion") {
      modis_placement = ModisPlacement::PostFusion;
    } else {
      throw ConfigError("modis_placement: expected lstm or post_fusion, got '" + v + "'");
    }
  } else {
    throw ConfigError("unknown model config key '" + key + "'");
  }
}

void FusionConfig::apply(const kv::Entries& entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

std::string FusionConfig::to_text() const {
  std::string s;
  for (auto src : kAllSources) s += "use_" + source_name(src) + "=" + (uses(src) ? "1" : "0") + "\n";
  s += "terrain_widths=" + kv::join(terrain_widths) + "\n";
  s += "sar_widths=" + kv::join(sar_widths) + "\n";
  s += "spectral_widths=" + kv::join(spectral_widths) + "\n";
  s += "terrain_embed=" + std::to_string(terrain_embed) + "\n";
  s += "sar_embed=" + std::to_string(sar_embed) + "\n";
  s += "spectral_embed=" + std::to_string(spectral_embed) + "\n";
  s += "lstm_hidden=" + std::to_string(lstm_hidden) + "\n";
  s += "mlp_hidden=" + std::to_string(mlp_hidden[0]) + "," + std::to_string(mlp_hidden[1]) + "\n";
  s += "patch_size=" + std::to_string(patch_size) + "\n";
  s += "weather_steps=" + std::to_string(weather_steps) + "\n";
  s += std::string("modis_placement=") + (modis_placement == ModisPlacement::Lstm ? "lstm" : "post_fusion") + "\n";
  return s;
}

FusionConfig FusionConfig::from_text(const std::vector<std::string>& lines, const std::string& source) {
  FusionConfig cfg;
  cfg.apply(kv::parse(lines, source));
  cfg.validate();
  return cfg;
}

FusionConfig FusionConfig::load(const std::filesystem::path& path) {
  return from_text(text::read_lines(path), path.string());
}

FusionConfig single_source_config(const FusionConfig& cfg, Source source) {
  FusionConfig out = cfg;
  for (auto s : kAllSources) out.set_enabled(s, s == source);
  return out;
}

}  // namespace snowfuse::model
