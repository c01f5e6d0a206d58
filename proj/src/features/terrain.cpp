#include <cmath>
#include <numbers>

#include "snowfuse/error.hpp"
#include "snowfuse/features.hpp"

namespace snowfuse::features {

SlopeAspect slope_aspect(const Raster& dem, double cell_size) {
  if (dem.bands() != 1) throw ArgumentError("slope_aspect: DEM must be single-band, got " + std::to_string(dem.bands()));
  if (dem.rows() < 3 || dem.cols() < 3) {
    throw DimensionError("slope_aspect: DEM must be at least 3x3, got " + std::to_string(dem.rows()) + "x" +
                         std::to_string(dem.cols()));
  }
  if (!(cell_size > 0.0)) throw ArgumentError("slope_aspect: cell_size must be > 0");

  constexpr double kDeg = 180.0 / std::numbers::pi;
  Raster slope(dem.spec(), 1);
  Raster aspect(dem.spec(), 1);
  const std::size_t rows = dem.rows(), cols = dem.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      bool valid = r > 0 && c > 0 && r + 1 < rows && c + 1 < cols;
      for (std::size_t dr = 0; valid && dr < 3; ++dr) {
        for (std::size_t dc = 0; dc < 3; ++dc) valid = valid && !dem.is_nodata(r + dr - 1, c + dc - 1);
      }
      if (!valid) {
        slope.set_nodata(r, c);
        aspect.set_nodata(r, c);
        continue;
      }
      auto z = [&](std::size_t dr, std::size_t dc) { return static_cast<double>(dem.at(r + dr - 1, c + dc - 1)); };
      // a b c
      // d e f
      // g h i   (rows run southward)
      const double gx = ((z(0, 2) + 2.0 * z(1, 2) + z(2, 2)) - (z(0, 0) + 2.0 * z(1, 0) + z(2, 0))) / (8.0 * cell_size);
      const double gy = ((z(2, 0) + 2.0 * z(2, 1) + z(2, 2)) - (z(0, 0) + 2.0 * z(0, 1) + z(0, 2))) / (8.0 * cell_size);
      slope.set(r, c, static_cast<float>(std::atan(std::hypot(gx, gy)) * kDeg));
      if (gx == 0.0 && gy == 0.0) {
        aspect.set_nodata(r, c);
        continue;
      }
      // Descent vector is (-gx east, +gy north); bearing measured clockwise from north.
      double deg = std::atan2(-gx, gy) * kDeg + 0.0;
      if (deg < 0.0) deg += 360.0;
      if (deg >= 360.0) deg -= 360.0;
      float stored = static_cast<float>(deg);
      if (stored >= 360.0f) stored = 0.0f;
      aspect.set(r, c, stored);
    }
  }
  return {std::move(slope), std::move(aspect)};
}

}  // namespace snowfuse::features
