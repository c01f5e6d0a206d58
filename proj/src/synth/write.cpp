#include "snowfuse/synth.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::synth {

namespace {

std::string file_stem(const std::string& basin) {
  std::string s = basin;
  for (auto& ch : s) {
    if (ch == ' ') ch = '_';
  }
  return s;
}

}  // namespace

void write_dataset(const SynthScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<train::ManifestRow> rows;
  for (const auto& w : scene.basins) {
    const std::string stem = file_stem(w.mask.name());
    raster::write_basin_mask(w.mask, train::mask_path(dir, w.mask.name()));
    const std::string dem = "terrain/" + stem + ".rstr";
    raster::write_raster(w.dem, dir / dem);
    const std::string weather = "weather/" + stem + "/cell_{row}_{col}.csv";
    const auto& g = w.mask.spec();
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        if (w.mask.contains(r, c)) features::write_weather_csv(w.weather[r * g.cols + c], dir / train::weather_path(weather, r, c));
      }
    }
    for (std::size_t d = 0; d < w.dates.size(); ++d) {
      const std::string tag = stem + "_" + w.dates[d].iso() + ".rstr";
      raster::write_raster(w.sar[d], dir / "sar" / tag);
      raster::write_raster(w.spectral[d], dir / "spectral" / tag);
      raster::write_raster(w.aso[d], dir / "aso" / tag);
      rows.push_back({w.mask.name(), w.dates[d], dem, "sar/" + tag, "spectral/" + tag, weather, "aso/" + tag});
    }
  }
  train::write_manifest(rows, dir / "manifest.csv");
  eval::write_stations_csv(scene.stations, dir / "stations.csv");
  text::write_file(dir / "synth.cfg", scene.config.to_text());
}

}  // namespace snowfuse::synth
