#include <cmath>

#include "snowfuse/error.hpp"
#include "snowfuse/model.hpp"

namespace snowfuse::model {

namespace {

struct ChannelStats {
  std::vector<double> sum, sumsq;
  std::vector<std::size_t> n;
  explicit ChannelStats(std::size_t c) : sum(c, 0.0), sumsq(c, 0.0), n(c, 0) {}

  void add_planes(std::span<const double> v, std::size_t channels) {
    const std::size_t plane = v.size() / channels;
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        const double x = v[c * plane + i];
        sum[c] += x;
        sumsq[c] += x * x;
      }
      n[c] += plane;
    }
  }

  void add_columns(std::span<const double> v, std::size_t columns) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = v[i];
      sum[i % columns] += x;
      sumsq[i % columns] += x * x;
      n[i % columns] += 1;
    }
  }

  void finish(std::vector<double>& mean, std::vector<double>& sd) const {
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (n[c] == 0) continue;
      const double m = sum[c] / static_cast<double>(n[c]);
      const double var = std::max(0.0, sumsq[c] / static_cast<double>(n[c]) - m * m);
      mean[c] = m;
      sd[c] = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
    }
  }
};

}  // namespace

FeatureScaler FeatureScaler::fit(std::span<const CellSample> samples) {
  if (samples.empty()) throw ArgumentError("FeatureScaler::fit: no samples");
  FeatureScaler s;
  ChannelStats terrain(kTerrainChannels), sar(kSarChannels), spectral(kSpectralChannels),
      weather(kModisColumns + kGridmetColumns), target(1);
  for (const auto& smp : samples) {
    if (smp.terrain_patch.defined()) terrain.add_planes(smp.terrain_patch.values(), kTerrainChannels);
    if (smp.sar_patch.defined()) sar.add_planes(smp.sar_patch.values(), kSarChannels);
    if (smp.spectral_patch.defined()) spectral.add_planes(smp.spectral_patch.values(), kSpectralChannels);
    if (smp.weather_seq.defined()) weather.add_columns(smp.weather_seq.values(), kModisColumns + kGridmetColumns);
    const double y = smp.target_swe;
    target.add_columns(std::span<const double>(&y, 1), 1);
  }
  terrain.finish(s.terrain_mean, s.terrain_std);
  sar.finish(s.sar_mean, s.sar_std);
  spectral.finish(s.spectral_mean, s.spectral_std);
  weather.finish(s.weather_mean, s.weather_std);
  std::vector<double> tm{0.0}, ts{1.0};
  target.finish(tm, ts);
  s.target_mean = tm[0];
  s.target_std = ts[0];
  return s;
}

void FeatureScaler::store(nn::ParamStore& store) const {
  store.set_buffer("scaler.terrain_mean", terrain_mean);
  store.set_buffer("scaler.terrain_std", terrain_std);
  store.set_buffer("scaler.sar_mean", sar_mean);
  store.set_buffer("scaler.sar_std", sar_std);
  store.set_buffer("scaler.spectral_mean", spectral_mean);
  store.set_buffer("scaler.spectral_std", spectral_std);
  store.set_buffer("scaler.weather_mean", weather_mean);
  store.set_buffer("scaler.weather_std", weather_std);
  store.set_buffer("scaler.target", {target_mean, target_std});
}

FeatureScaler FeatureScaler::load(const nn::ParamStore& store) {
  FeatureScaler s;
  if (!store.has_buffer("scaler.target")) return s;
  auto get = [&](const std::string& name, std::vector<double>& out) {
    const auto& b = store.buffer(name);
    if (b.size() != out.size()) throw ShapeError("scaler buffer '" + name + "' has wrong length");
    out = b;
  };
  get("scaler.terrain_mean", s.terrain_mean);
  get("scaler.terrain_std", s.terrain_std);
  get("scaler.sar_mean", s.sar_mean);
  get("scaler.sar_std", s.sar_std);
  get("scaler.spectral_mean", s.spectral_mean);
  get("scaler.spectral_std", s.spectral_std);
  get("scaler.weather_mean", s.weather_mean);
  get("scaler.weather_std", s.weather_std);
  const auto& t = store.buffer("scaler.target");
  if (t.size() != 2) throw ShapeError("scaler buffer 'scaler.target' has wrong length");
  s.target_mean = t[0];
  s.target_std = t[1];
  return s;
}

}  // namespace snowfuse::model
