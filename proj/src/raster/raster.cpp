#include "snowfuse/raster.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "snowfuse/error.hpp"

namespace snowfuse::raster {

void GridSpec::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ArgumentError("GridSpec: cell_size must be > 0");
  if (rows < 1 || cols < 1) throw ArgumentError("GridSpec: rows and cols must be >= 1");
}

std::string describe(const GridSpec& s) {
  std::ostringstream os;
  os.precision(17);
  os << s.rows << "x" << s.cols << " @" << s.cell_size << "m origin(" << s.origin_x << "," << s.origin_y
     << ") crs='" << s.crs_tag << "'";
  return os.str();
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const std::string& context) {
  if (!(a == b)) throw GridMismatchError(context + ": grid " + describe(a) + " does not match " + describe(b));
}

Raster::Raster(GridSpec spec, std::size_t bands)
    : Raster(spec, bands, std::vector<float>(bands * spec.rows * spec.cols, 0.0f),
             std::vector<std::uint8_t>(spec.rows * spec.cols, 0)) {}

Raster::Raster(GridSpec spec, std::size_t bands, std::vector<float> values, std::vector<std::uint8_t> nodata)
    : spec_(std::move(spec)), bands_(bands), values_(std::move(values)), nodata_(std::move(nodata)) {
  spec_.validate();
  if (bands_ < 1) throw ArgumentError("Raster: bands must be >= 1");
  if (values_.size() != bands_ * pixel_count()) {
    throw DimensionError("Raster: values length " + std::to_string(values_.size()) + " != bands*rows*cols " +
                         std::to_string(bands_ * pixel_count()));
  }
  if (nodata_.size() != pixel_count()) throw DimensionError("Raster: nodata mask length mismatch");
  for (auto& m : nodata_) m = m ? 1 : 0;
}

std::size_t Raster::valid_count() const {
  std::size_t n = 0;
  for (auto m : nodata_) n += (m == 0);
  return n;
}

Raster Raster::band(std::size_t b) const {
  if (b >= bands_) throw ArgumentError("Raster::band: index " + std::to_string(b) + " out of range");
  const auto n = pixel_count();
  std::vector<float> v(values_.begin() + static_cast<std::ptrdiff_t>(b * n),
                       values_.begin() + static_cast<std::ptrdiff_t>((b + 1) * n));
  return Raster(spec_, 1, std::move(v), nodata_);
}

void Raster::check_finite(const std::string& context) const {
  const auto n = pixel_count();
  for (std::size_t b = 0; b < bands_; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!nodata_[i] && std::isnan(values_[b * n + i])) {
        throw ArgumentError(context + ": NaN in unmasked pixel " + std::to_string(i) + " of band " +
                            std::to_string(b));
      }
    }
  }
}

bool Raster::bit_identical(const Raster& other) const {
  if (!(spec_ == other.spec_) || bands_ != other.bands_ || nodata_ != other.nodata_) return false;
  return values_.size() == other.values_.size() &&
         std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(float)) == 0;
}

BasinMask::BasinMask(GridSpec spec, std::vector<std::uint8_t> inside, std::string name)
    : spec_(std::move(spec)), inside_(std::move(inside)), name_(std::move(name)) {
  spec_.validate();
  if (inside_.size() != spec_.rows * spec_.cols) throw DimensionError("BasinMask '" + name_ + "': length mismatch");
  for (auto& m : inside_) m = m ? 1 : 0;
  if (inside_count() == 0) throw ArgumentError("BasinMask '" + name_ + "': no cell inside the basin");
}

std::size_t BasinMask::inside_count() const {
  std::size_t n = 0;
  for (auto m : inside_) n += m;
  return n;
}

double BasinMask::area_km2() const {
  const double km = spec_.cell_size / 1000.0;
  return static_cast<double>(inside_count()) * km * km;
}

Raster aggregate_mean(const Raster& src, long factor, EdgePolicy policy) {
  if (factor <= 0) throw ArgumentError("aggregate_mean: factor must be positive, got " + std::to_string(factor));
  if (src.bands() != 1) throw ArgumentError("aggregate_mean: expected a single-band raster");
  const auto f = static_cast<std::size_t>(factor);
  const auto& s = src.spec();
  if ((s.rows % f != 0 || s.cols % f != 0) && policy == EdgePolicy::Refuse) {
    throw DimensionError("aggregate_mean: " + std::to_string(s.rows) + "x" + std::to_string(s.cols) +
                         " is not divisible by factor " + std::to_string(factor) + " (use pad-edge)");
  }
  GridSpec out_spec = s;
  out_spec.rows = (s.rows + f - 1) / f;
  out_spec.cols = (s.cols + f - 1) / f;
  out_spec.cell_size = s.cell_size * static_cast<double>(f);
  Raster out(out_spec, 1);
  for (std::size_t br = 0; br < out_spec.rows; ++br) {
    for (std::size_t bc = 0; bc < out_spec.cols; ++bc) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r = br * f; r < std::min(s.rows, (br + 1) * f); ++r) {
        for (std::size_t c = bc * f; c < std::min(s.cols, (bc + 1) * f); ++c) {
          if (src.is_nodata(r, c)) continue;
          sum += static_cast<double>(src.at(r, c));
          ++n;
        }
      }
      if (n == 0) {
        out.set_nodata(br, bc);
      } else {
        out.set(br, bc, static_cast<float>(sum / static_cast<double>(n)));
      }
    }
  }
  return out;
}

Raster meters_to_inches(const Raster& meters) {
  Raster out = meters;
  for (auto& v : out.values()) v = static_cast<float>(meters_to_inches(static_cast<double>(v)));
  return out;
}

Raster crop(const Raster& r, const BasinMask& mask) {
  require_same_grid(r.spec(), mask.spec(), "crop to basin '" + mask.name() + "'");
  Raster out = r;
  for (std::size_t row = 0; row < r.rows(); ++row) {
    for (std::size_t col = 0; col < r.cols(); ++col) {
      if (!mask.contains(row, col)) out.set_nodata(row, col);
    }
  }
  return out;
}

}  // namespace snowfuse::raster
