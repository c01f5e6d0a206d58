#include <cmath>

#include "snowfuse/error.hpp"
#include "snowfuse/model.hpp"
#include "snowfuse/nn/ops.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::model {

using nn::Tensor;

namespace {

Tensor standardize_planes(const Tensor& patch, std::size_t channels, std::size_t p, const std::vector<double>& mean,
                          const std::vector<double>& sd, const char* what) {
  if (!patch.defined() || patch.shape() != nn::Shape{channels, p, p}) {
    throw ShapeError(std::string(what) + " patch: expected " + nn::shape_str({channels, p, p}) + ", got " +
                     (patch.defined() ? nn::shape_str(patch.shape()) : std::string("none")));
  }
  std::vector<double> v(patch.values().begin(), patch.values().end());
  const std::size_t plane = p * p;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) v[c * plane + i] = (v[c * plane + i] - mean[c]) / sd[c];
  }
  return Tensor::from({channels, p, p}, std::move(v));
}

Tensor conv_block(const nn::ParamStore& ps, const std::string& name, const Tensor& x, std::size_t stride) {
  auto y = nn::conv2d(x, ps.get(name + ".weight"), stride, 1);
  return nn::relu(nn::add_channel_bias(y, ps.get(name + ".bias")));
}

}  // namespace

FusionModel::FusionModel(FusionConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  build(seed);
  scaler_.store(params_);
}

FusionModel::FusionModel(FusionConfig config, nn::ParamStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  check_shapes();
  scaler_ = FeatureScaler::load(params_);
}

void FusionModel::set_scaler(const FeatureScaler& s) {
  scaler_ = s;
  scaler_.store(params_);
}

void FusionModel::build(std::uint64_t seed) {
  nn::SeededRng rng(seed);
  auto conv = [&](const std::string& name, std::size_t out, std::size_t in, std::size_t k) {
    params_.add_uniform(name + ".weight", {out, in, k, k}, in * k * k, rng);
    params_.add_uniform(name + ".bias", {out}, in * k * k, rng);
  };
  auto depthwise = [&](const std::string& name, std::size_t channels) {
    params_.add_uniform(name + ".weight", {channels, 1, 3, 3}, 9, rng);
    params_.add_uniform(name + ".bias", {channels}, 9, rng);
  };
  auto dense = [&](const std::string& name, std::size_t out, std::size_t in) {
    params_.add_uniform(name + ".weight", {out, in}, in, rng);
    params_.add_uniform(name + ".bias", {out}, in, rng);
  };
  const auto& c = config_;
  if (c.uses(Source::Terrain)) {
    std::size_t in = kTerrainChannels;
    for (std::size_t b = 0; b < c.terrain_widths.size(); ++b) {
      const std::string blk = "terrain.b" + std::to_string(b + 1);
      depthwise(blk + ".dw", in);
      conv(blk + ".pw", c.terrain_widths[b], in, 1);
      in = c.terrain_widths[b];
    }
    dense("terrain.proj", c.terrain_embed, in);
  }
  auto standard = [&](const std::string& prefix, std::size_t channels, const std::vector<std::size_t>& widths,
                      std::size_t embed) {
    std::size_t in = channels;
    for (std::size_t b = 0; b < widths.size(); ++b) {
      conv(prefix + ".c" + std::to_string(b + 1), widths[b], in, 3);
      in = widths[b];
    }
    dense(prefix + ".proj", embed, in);
  };
  if (c.uses(Source::Sar)) standard("sar", kSarChannels, c.sar_widths, c.sar_embed);
  if (c.uses(Source::Spectral)) standard("spectral", kSpectralChannels, c.spectral_widths, c.spectral_embed);
  if (c.has_lstm()) {
    const std::size_t h = c.lstm_hidden, f = c.sequence_features();
    params_.add_uniform("weather.lstm.w_ih", {4 * h, f}, h, rng);
    params_.add_uniform("weather.lstm.w_hh", {4 * h, h}, h, rng);
    params_.add_uniform("weather.lstm.bias", {4 * h}, h, rng);
  }
  dense("mlp.fc1", c.mlp_hidden[0], c.fusion_dim());
  dense("mlp.fc2", c.mlp_hidden[1], c.mlp_hidden[0]);
  dense("mlp.fc3", 1, c.mlp_hidden[1]);
}

void FusionModel::check_shapes() const {
  FusionModel reference(config_, 0);
  const auto& want = reference.params_.params();
  const auto& have = params_.params();
  if (want.size() != have.size()) {
    throw ShapeError("checkpoint has " + std::to_string(have.size()) + " parameters, config expects " +
                     std::to_string(want.size()));
  }
  for (const auto& [name, t] : want) {
    auto it = have.find(name);
    if (it == have.end()) throw ShapeError("checkpoint lacks parameter '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ShapeError("parameter '" + name + "': checkpoint shape " + nn::shape_str(it->second.shape()) +
                       " vs config shape " + nn::shape_str(t.shape()));
    }
  }
}

void FusionModel::zero_output_layer() {
  for (auto* name : {"mlp.fc3.weight", "mlp.fc3.bias"}) {
    for (auto& v : params_.get(name).mutable_values()) v = 0.0;
  }
}

Tensor FusionModel::encode_terrain(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t b = 0; b < config_.terrain_widths.size(); ++b) {
    const std::string blk = "terrain.b" + std::to_string(b + 1);
    const std::size_t stride = b == 0 ? 1 : 2;
    h = nn::depthwise_conv2d(h, params_.get(blk + ".dw.weight"), stride, 1);
    h = nn::relu(nn::add_channel_bias(h, params_.get(blk + ".dw.bias")));
    h = conv_block(params_, blk + ".pw", h, 1);
  }
  return nn::linear(nn::global_avg_pool(h), params_.get("terrain.proj.weight"), params_.get("terrain.proj.bias"));
}

Tensor FusionModel::encode_standard(const std::string& prefix, std::size_t blocks, const Tensor& x) const {
  Tensor h = x;
  for (std::size_t b = 0; b < blocks; ++b) h = conv_block(params_, prefix + ".c" + std::to_string(b + 1), h, b == 0 ? 1 : 2);
  return nn::linear(nn::global_avg_pool(h), params_.get(prefix + ".proj.weight"), params_.get(prefix + ".proj.bias"));
}

Tensor FusionModel::embed(const CellSample& s) const {
  const auto& c = config_;
  const std::size_t p = c.patch_size;
  std::vector<Tensor> parts;
  if (c.uses(Source::Terrain)) {
    parts.push_back(encode_terrain(
        standardize_planes(s.terrain_patch, kTerrainChannels, p, scaler_.terrain_mean, scaler_.terrain_std, "terrain")));
  }
  if (c.uses(Source::Sar)) {
    parts.push_back(encode_standard(
        "sar", c.sar_widths.size(),
        standardize_planes(s.sar_patch, kSarChannels, p, scaler_.sar_mean, scaler_.sar_std, "sar")));
  }
  if (c.uses(Source::Spectral)) {
    parts.push_back(encode_standard("spectral", c.spectral_widths.size(),
                                    standardize_planes(s.spectral_patch, kSpectralChannels, p, scaler_.spectral_mean,
                                                       scaler_.spectral_std, "spectral")));
  }
  const bool need_table = c.has_lstm() || c.static_features() > 0;
  constexpr std::size_t cols = kModisColumns + kGridmetColumns;
  if (need_table && (!s.weather_seq.defined() || s.weather_seq.shape() != nn::Shape{c.weather_steps, cols})) {
    throw ShapeError("weather_seq: expected " + nn::shape_str({c.weather_steps, cols}) + ", got " +
                     (s.weather_seq.defined() ? nn::shape_str(s.weather_seq.shape()) : std::string("none")));
  }
  auto scaled = [&](std::size_t t, std::size_t col) {
    return (s.weather_seq.values()[t * cols + col] - scaler_.weather_mean[col]) / scaler_.weather_std[col];
  };
  if (c.has_lstm()) {
    std::vector<std::size_t> use;
    if (c.uses(Source::Modis) && c.modis_placement == ModisPlacement::Lstm) use = {0, 1};
    if (c.uses(Source::Weather)) {
      for (std::size_t col = kModisColumns; col < cols; ++col) use.push_back(col);
    }
    std::vector<double> seq;
    seq.reserve(c.weather_steps * use.size());
    for (std::size_t t = 0; t < c.weather_steps; ++t) {
      for (auto col : use) seq.push_back(scaled(t, col));
    }
    const std::size_t h = c.lstm_hidden;
    nn::LstmWeights w{params_.get("weather.lstm.w_ih"), params_.get("weather.lstm.w_hh"),
                      params_.get("weather.lstm.bias")};
    parts.push_back(nn::lstm_sequence(Tensor::from({c.weather_steps, use.size()}, std::move(seq)), w,
                                      Tensor::zeros({h}), Tensor::zeros({h})));
  }
  if (c.static_features() > 0) {
    std::vector<double> extra;
    if (c.modis_placement == ModisPlacement::PostFusion) {
      extra.push_back(scaled(c.weather_steps - 1, 0));
      extra.push_back(scaled(c.weather_steps - 1, 1));
    }
    extra.push_back(s.modis_valid[0]);
    extra.push_back(s.modis_valid[1]);
    const std::size_t n = extra.size();
    parts.push_back(Tensor::from({n}, std::move(extra)));
  }
  return nn::concat(parts);
}

Tensor FusionModel::forward_standardized(const CellSample& s) const {
  auto h = nn::relu(nn::linear(embed(s), params_.get("mlp.fc1.weight"), params_.get("mlp.fc1.bias")));
  h = nn::relu(nn::linear(h, params_.get("mlp.fc2.weight"), params_.get("mlp.fc2.bias")));
  return nn::linear(h, params_.get("mlp.fc3.weight"), params_.get("mlp.fc3.bias"));
}

double FusionModel::predict(const CellSample& s) const {
  nn::NoGradGuard guard;
  return forward_standardized(s).item() * scaler_.target_std + scaler_.target_mean;
}

double forward(const FusionModel& model, const CellSample& sample) { return model.predict(sample); }

double forward_single_source(const FusionModel& model, const CellSample& sample, const std::string& source) {
  const Source src = parse_source(source);
  for (auto s : kAllSources) {
    if (model.config().uses(s) != (s == src)) {
      throw ArgumentError("forward_single_source: model is not the single-source '" + source + "' model");
    }
  }
  return model.predict(sample);
}

void save_model(const FusionModel& model, const std::filesystem::path& stem) {
  auto ckpt = stem;
  ckpt += ".ckpt";
  auto cfg = stem;
  cfg += ".cfg";
  model.params().save(ckpt);
  text::write_file(cfg, model.config().to_text());
}

FusionModel load_model(const std::filesystem::path& stem) {
  auto ckpt = stem;
  ckpt += ".ckpt";
  auto cfg = stem;
  cfg += ".cfg";
  return FusionModel(FusionConfig::load(cfg), nn::ParamStore::load(ckpt));
}

}  // namespace snowfuse::model
