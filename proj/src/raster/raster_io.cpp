#include <algorithm>
#include <array>
#include <limits>

#include "snowfuse/binary_io.hpp"
#include "snowfuse/error.hpp"
#include "snowfuse/raster.hpp"

namespace snowfuse::raster {

namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'R', 'S', 'T', 'R', '1', 0, 0, 0};

std::size_t checked_mul(std::uint64_t a, std::uint64_t b, const std::string& what) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) throw ParseError(what + ": size overflow");
  return static_cast<std::size_t>(a * b);
}

}  // namespace

std::vector<std::uint8_t> encode_raster(const Raster& r) {
  binary::Writer w;
  const auto& s = r.spec();
  w.bytes(kMagic);
  w.u64(s.rows);
  w.u64(s.cols);
  w.u64(r.bands());
  w.f64(s.cell_size);
  w.f64(s.origin_x);
  w.f64(s.origin_y);
  w.u64(s.crs_tag.size());
  w.str(s.crs_tag);

  // Nodata bit plane: row-major, LSB-first, set bit = nodata.
  const auto mask = r.nodata_mask();
  std::vector<std::uint8_t> plane((mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) plane[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  w.bytes(plane);
  for (float v : r.values()) w.f32(v);
  return std::move(w.buffer());
}

Raster decode_raster(std::span<const std::uint8_t> bytes, const std::string& source) {
  binary::Reader rd(bytes, source);
  if (bytes.size() < kMagic.size()) throw ParseError(source + ": truncated while reading magic");
  auto magic = rd.take(kMagic.size(), "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw ParseError(source + ": bad magic, expected RSTR1");
  }
  GridSpec s;
  const auto rows = rd.u64("header field rows");
  const auto cols = rd.u64("header field cols");
  const auto bands = rd.u64("header field bands");
  s.cell_size = rd.f64("header field cell_size");
  s.origin_x = rd.f64("header field origin_x");
  s.origin_y = rd.f64("header field origin_y");
  const auto tag_len = rd.u64("header field crs_tag_len");
  if (rows == 0 || cols == 0) throw ParseError(source + ": header field rows/cols must be nonzero");
  if (bands == 0) throw ParseError(source + ": header field bands must be nonzero");
  if (!(s.cell_size > 0.0)) throw ParseError(source + ": header field cell_size must be positive");
  if (tag_len > rd.remaining()) {
    throw ParseError(source + ": truncated while reading crs_tag (declared " + std::to_string(tag_len) +
                     " bytes, have " + std::to_string(rd.remaining()) + ")");
  }
  auto tag = rd.take(static_cast<std::size_t>(tag_len), "crs_tag");
  s.crs_tag.assign(tag.begin(), tag.end());
  s.rows = static_cast<std::size_t>(rows);
  s.cols = static_cast<std::size_t>(cols);

  const auto pixels = checked_mul(rows, cols, source + ": header field rows*cols");
  const auto count = checked_mul(pixels, bands, source + ": header field bands*rows*cols");
  const auto plane_bytes = (pixels + 7) / 8;
  const auto value_bytes = checked_mul(count, 4, source + ": values");
  const auto expected = plane_bytes + value_bytes;
  if (rd.remaining() < expected) {
    throw ParseError(source + ": truncated payload: header declares " + std::to_string(rows) + "x" +
                     std::to_string(cols) + "x" + std::to_string(bands) + " needing " + std::to_string(expected) +
                     " bytes of nodata plane + values, found " + std::to_string(rd.remaining()));
  }
  if (rd.remaining() > expected) {
    throw ParseError(source + ": payload size disagrees with header: " + std::to_string(rd.remaining() - expected) +
                     " trailing bytes after values");
  }
  auto plane = rd.take(plane_bytes, "nodata plane");
  std::vector<std::uint8_t> mask(pixels);
  for (std::size_t i = 0; i < pixels; ++i) mask[i] = (plane[i / 8] >> (i % 8)) & 1u;
  std::vector<float> values(count);
  for (auto& v : values) v = rd.f32("values");
  return Raster(std::move(s), static_cast<std::size_t>(bands), std::move(values), std::move(mask));
}

void write_raster(const Raster& r, const std::filesystem::path& path) {
  binary::write_file(path, encode_raster(r));
}

Raster read_raster(const std::filesystem::path& path) {
  const auto bytes = binary::read_file(path);
  return decode_raster(bytes, path.string());
}

void write_basin_mask(const BasinMask& mask, const std::filesystem::path& path) {
  Raster r(mask.spec(), 1);
  for (std::size_t row = 0; row < r.rows(); ++row) {
    for (std::size_t col = 0; col < r.cols(); ++col) {
      if (mask.contains(row, col)) {
        r.set(row, col, 1.0f);
      } else {
        r.set_nodata(row, col);
      }
    }
  }
  write_raster(r, path);
}

BasinMask read_basin_mask(const std::filesystem::path& path, std::string name) {
  const Raster r = read_raster(path);
  if (r.bands() != 1) throw ParseError(path.string() + ": basin mask must have exactly one band");
  std::vector<std::uint8_t> inside(r.pixel_count());
  for (std::size_t row = 0; row < r.rows(); ++row) {
    for (std::size_t col = 0; col < r.cols(); ++col) {
      inside[row * r.cols() + col] = !r.is_nodata(row, col) && r.at(row, col) > 0.5f;
    }
  }
  return BasinMask(r.spec(), std::move(inside), std::move(name));
}

}  // namespace snowfuse::raster
