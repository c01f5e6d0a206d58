#ifndef SNOWFUSE_BINARY_IO_HPP
#define SNOWFUSE_BINARY_IO_HPP

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace snowfuse::binary {

/// Little-endian encoder independent of host byte order.
class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void str(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/**
 * Bounds-checked little-endian decoder. Every read names the field it is
 * decoding so truncation errors point at the offending part of the file.
 */
class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, std::string source) : data_(data), source_(std::move(source)) {}

  std::span<const std::uint8_t> take(std::size_t n, std::string_view field);
  std::uint64_t u64(std::string_view field);
  std::uint32_t u32(std::string_view field);
  double f64(std::string_view field) { return std::bit_cast<double>(u64(field)); }
  float f32(std::string_view field) { return std::bit_cast<float>(u32(field)); }

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  const std::string& source() const { return source_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string source_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace snowfuse::binary

#endif  // SNOWFUSE_BINARY_IO_HPP
