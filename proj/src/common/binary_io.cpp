#include "snowfuse/binary_io.hpp"

#include <fstream>
#include <iterator>

#include "snowfuse/error.hpp"

namespace snowfuse::binary {

std::span<const std::uint8_t> Reader::take(std::size_t n, std::string_view field) {
  if (remaining() < n) {
    throw ParseError(source_ + ": truncated while reading " + std::string(field) + " (need " + std::to_string(n) +
                     " bytes at offset " + std::to_string(pos_) + ", have " + std::to_string(remaining()) + ")");
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint64_t Reader::u64(std::string_view field) {
  auto b = take(8, field);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint32_t Reader::u32(std::string_view field) {
  auto b = take(4, field);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace snowfuse::binary
