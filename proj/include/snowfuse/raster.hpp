#ifndef SNOWFUSE_RASTER_HPP
#define SNOWFUSE_RASTER_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace snowfuse::raster {

/**
 * Placement of a regular grid in a projected CRS. The origin is the
 * top-left corner; rows increase southward, columns eastward.
 */
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 1.0;  // meters per pixel
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::string crs_tag;

  /// Throws ArgumentError unless cell_size > 0 and rows, cols >= 1.
  void validate() const;

  double cell_center_x(std::size_t col) const { return origin_x + (static_cast<double>(col) + 0.5) * cell_size; }
  double cell_center_y(std::size_t row) const { return origin_y - (static_cast<double>(row) + 0.5) * cell_size; }

  bool operator==(const GridSpec&) const = default;
};

/// Human-readable summary used in grid-compatibility error messages.
std::string describe(const GridSpec& spec);

/// Throws GridMismatchError naming `context` when the specs differ.
void require_same_grid(const GridSpec& a, const GridSpec& b, const std::string& context);

/**
 * Multi-band float32 grid with a per-pixel nodata flag shared across bands.
 * Values are band-major, row-major.
 */
class Raster {
 public:
  Raster() = default;
  /// All pixels valid, all values zero.
  explicit Raster(GridSpec spec, std::size_t bands = 1);
  Raster(GridSpec spec, std::size_t bands, std::vector<float> values, std::vector<std::uint8_t> nodata);

  const GridSpec& spec() const { return spec_; }
  std::size_t rows() const { return spec_.rows; }
  std::size_t cols() const { return spec_.cols; }
  std::size_t bands() const { return bands_; }
  std::size_t pixel_count() const { return spec_.rows * spec_.cols; }

  float at(std::size_t band, std::size_t row, std::size_t col) const {
    return values_[(band * spec_.rows + row) * spec_.cols + col];
  }
  float at(std::size_t row, std::size_t col) const { return at(0, row, col); }
  void set(std::size_t band, std::size_t row, std::size_t col, float v) {
    values_[(band * spec_.rows + row) * spec_.cols + col] = v;
  }
  void set(std::size_t row, std::size_t col, float v) { set(0, row, col, v); }

  bool is_nodata(std::size_t row, std::size_t col) const { return nodata_[row * spec_.cols + col] != 0; }
  void set_nodata(std::size_t row, std::size_t col, bool nodata = true) {
    nodata_[row * spec_.cols + col] = nodata ? 1 : 0;
  }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }
  std::span<const std::uint8_t> nodata_mask() const { return nodata_; }

  std::size_t valid_count() const;

  /// Copy of one band as a single-band raster with the same mask.
  Raster band(std::size_t b) const;

  /// Throws ArgumentError if any unmasked pixel is NaN.
  void check_finite(const std::string& context) const;

  /// Bitwise comparison of spec, mask and every stored value.
  bool bit_identical(const Raster& other) const;

 private:
  GridSpec spec_;
  std::size_t bands_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> nodata_;
};

/// Cells of the 1 km prediction grid that belong to a named basin.
class BasinMask {
 public:
  BasinMask(GridSpec spec, std::vector<std::uint8_t> inside, std::string name);

  const GridSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  bool contains(std::size_t row, std::size_t col) const { return inside_[row * spec_.cols + col] != 0; }
  std::span<const std::uint8_t> inside() const { return inside_; }
  std::size_t inside_count() const;
  double area_km2() const;

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> inside_;
  std::string name_;
};

enum class EdgePolicy {
  Refuse,   // non-divisible dimensions raise DimensionError
  PadEdge,  // partial edge blocks average their in-bounds valid pixels
};

/**
 * Block mean of a single-band raster. Each output cell is the mean of the
 * unmasked pixels of its factor x factor block (accumulated in double);
 * blocks with no valid pixel are nodata.
 */
Raster aggregate_mean(const Raster& src, long factor = 20, EdgePolicy policy = EdgePolicy::Refuse);

inline constexpr double kInchesPerMeter = 39.3701;

constexpr double meters_to_inches(double meters) { return meters * kInchesPerMeter; }
Raster meters_to_inches(const Raster& meters);

/// Cells outside the mask become nodata; other cells are copied unchanged.
Raster crop(const Raster& r, const BasinMask& mask);

/// RSTR1 binary format, see README.
void write_raster(const Raster& r, const std::filesystem::path& path);
Raster read_raster(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_raster(const Raster& r);
Raster decode_raster(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

/// Masks are stored as single-band RSTR1 files: 1 inside, nodata outside.
void write_basin_mask(const BasinMask& mask, const std::filesystem::path& path);
BasinMask read_basin_mask(const std::filesystem::path& path, std::string name);

}  // namespace snowfuse::raster

#endif  // SNOWFUSE_RASTER_HPP
