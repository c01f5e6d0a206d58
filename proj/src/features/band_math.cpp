#include <algorithm>
#include <cmath>
#include <limits>

#include "snowfuse/error.hpp"
#include "snowfuse/features.hpp"

namespace snowfuse::features {

namespace {

void require_single(const Raster& r, const char* op, const char* name) {
  if (r.bands() != 1) throw ArgumentError(std::string(op) + ": input '" + name + "' must be single-band");
}

}  // namespace

Raster normalized_ratio(const Raster& a, const Raster& b) {
  raster::require_same_grid(a.spec(), b.spec(), "normalized_ratio");
  require_single(a, "normalized_ratio", "a");
  require_single(b, "normalized_ratio", "b");
  Raster out(a.spec(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (a.is_nodata(r, c) || b.is_nodata(r, c)) {
        out.set_nodata(r, c);
        continue;
      }
      const double x = a.at(r, c), y = b.at(r, c);
      const double den = x + y;
      if (std::abs(den) < kRatioEpsilon) {
        out.set_nodata(r, c);
        continue;
      }
      double v = (x - y) / den;
      if (x >= 0.0 && y >= 0.0) v = std::clamp(v, -1.0, 1.0);
      out.set(r, c, static_cast<float>(v));
    }
  }
  return out;
}

Raster stack_bands(std::span<const Raster> parts) {
  if (parts.empty()) throw ArgumentError("stack_bands: no input rasters");
  const auto& spec = parts.front().spec();
  std::size_t bands = 0;
  for (const auto& p : parts) {
    raster::require_same_grid(spec, p.spec(), "stack_bands");
    bands += p.bands();
  }
  std::vector<float> values;
  values.reserve(bands * parts.front().pixel_count());
  std::vector<std::uint8_t> mask(parts.front().pixel_count(), 0);
  for (const auto& p : parts) {
    values.insert(values.end(), p.values().begin(), p.values().end());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] |= p.nodata_mask()[i];
  }
  return Raster(spec, bands, std::move(values), std::move(mask));
}

Raster sar_composite(const Raster& vv, const Raster& vh) {
  raster::require_same_grid(vv.spec(), vh.spec(), "sar_composite");
  require_single(vv, "sar_composite", "vv");
  require_single(vh, "sar_composite", "vh");
  Raster sum(vv.spec(), 1);
  for (std::size_t r = 0; r < vv.rows(); ++r) {
    for (std::size_t c = 0; c < vv.cols(); ++c) {
      if (vv.is_nodata(r, c) || vh.is_nodata(r, c)) {
        sum.set_nodata(r, c);
      } else {
        sum.set(r, c, vv.at(r, c) + vh.at(r, c));
      }
    }
  }
  const Raster parts[] = {vv, vh, sum};
  return stack_bands(parts);
}

Raster scene_minmax(const Raster& r) {
  Raster out = r;
  const auto n = r.pixel_count();
  const auto mask = r.nodata_mask();
  for (std::size_t b = 0; b < r.bands(); ++b) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) continue;
      lo = std::min(lo, static_cast<double>(r.values()[b * n + i]));
      hi = std::max(hi, static_cast<double>(r.values()[b * n + i]));
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) continue;
      const double v = r.values()[b * n + i];
      out.values()[b * n + i] = range > 0.0 ? static_cast<float>((v - lo) / range) : 0.0f;
    }
  }
  return out;
}

std::string band_name(SpectralBand b) {
  switch (b) {
    case SpectralBand::B2: return "B2";
    case SpectralBand::B4: return "B4";
    case SpectralBand::B8: return "B8";
    case SpectralBand::B8A: return "B8A";
    case SpectralBand::B12: return "B12";
  }
  throw ArgumentError("unknown spectral band");
}

SpectralBand parse_band(const std::string& name) {
  for (auto b : {SpectralBand::B2, SpectralBand::B4, SpectralBand::B8, SpectralBand::B8A, SpectralBand::B12}) {
    if (band_name(b) == name) return b;
  }
  throw ArgumentError("unknown spectral band '" + name + "'");
}

void SpectralScene::add(SpectralBand band, Raster r) {
  if (r.bands() != 1) throw ArgumentError("SpectralScene: band " + band_name(band) + " must be single-band");
  if (!bands_.empty()) raster::require_same_grid(bands_.begin()->second.spec(), r.spec(), "SpectralScene " + band_name(band));
  bands_.insert_or_assign(band, std::move(r));
}

const Raster& SpectralScene::get(SpectralBand band) const {
  auto it = bands_.find(band);
  if (it == bands_.end()) throw ArgumentError("SpectralScene: band " + band_name(band) + " missing");
  return it->second;
}

Raster SpectralScene::geology_trio() const {
  const auto& b8a = get(SpectralBand::B8A);
  const auto& b12 = get(SpectralBand::B12);
  const Raster parts[] = {b8a, b12, normalized_ratio(b8a, b12)};
  return stack_bands(parts);
}

Raster SpectralScene::vegetation_trio() const {
  const auto& b2 = get(SpectralBand::B2);
  const Raster parts[] = {b2, get(SpectralBand::B4), normalized_ratio(get(SpectralBand::B8), b2)};
  return stack_bands(parts);
}

Raster SpectralScene::stacked() const {
  const Raster parts[] = {geology_trio(), vegetation_trio()};
  return stack_bands(parts);
}

std::optional<double> modis_tabular(const std::array<std::optional<double>, 4>& pixels, double theoretical_max) {
  if (!(theoretical_max > 0.0)) throw ArgumentError("modis_tabular: theoretical_max must be > 0");
  std::vector<double> valid;
  for (const auto& p : pixels) {
    if (p) valid.push_back(*p);
  }
  if (valid.empty()) return std::nullopt;
  // sorted so the sum does not depend on pixel order
  std::sort(valid.begin(), valid.end());
  double sum = 0.0;
  for (double v : valid) sum += v;
  return std::clamp(sum / static_cast<double>(valid.size()) / theoretical_max, 0.0, 1.0);
}

std::vector<double> extract_patch(const Raster& r, double center_x, double center_y, std::size_t size) {
  const auto& s = r.spec();
  const double half = static_cast<double>(size) / 2.0;
  const long c0 = std::lround((center_x - s.origin_x) / s.cell_size - half);
  const long r0 = std::lround((s.origin_y - center_y) / s.cell_size - half);
  std::vector<double> out(r.bands() * size * size, 0.0);
  for (std::size_t b = 0; b < r.bands(); ++b) {
    for (std::size_t i = 0; i < size; ++i) {
      const long rr = r0 + static_cast<long>(i);
      if (rr < 0 || rr >= static_cast<long>(s.rows)) continue;
      for (std::size_t j = 0; j < size; ++j) {
        const long cc = c0 + static_cast<long>(j);
        if (cc < 0 || cc >= static_cast<long>(s.cols)) continue;
        const auto ur = static_cast<std::size_t>(rr), uc = static_cast<std::size_t>(cc);
        if (r.is_nodata(ur, uc)) continue;
        out[(b * size + i) * size + j] = r.at(b, ur, uc);
      }
    }
  }
  return out;
}

}  // namespace snowfuse::features
