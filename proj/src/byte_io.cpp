#include "tilegraph/byte_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "tilegraph/errors.hpp"

namespace tilegraph {

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_tag(std::string_view tag) {
  for (char c : tag) buf_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::put_crc32() { put_u32(crc32(buf_)); }

double ByteReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::span<const std::uint8_t> ByteReader::get_bytes(std::size_t n) {
  if (n > remaining()) throw FormatError("truncated input");
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

bool ByteReader::peek_tag(std::string_view tag) const {
  if (tag.size() > remaining()) return false;
  return std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) == 0;
}

std::uint64_t ByteReader::get_le(int width) {
  auto raw = get_bytes(static_cast<std::size_t>(width));
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
  return v;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const std::uint8_t* p = bytes.data();
  std::size_t left = bytes.size();
  while (left > 0) {
    auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::span<const std::uint8_t> verify_crc32_trailer(std::span<const std::uint8_t> bytes, std::string_view what) {
  if (bytes.size() < 4) throw FormatError(std::string(what) + ": truncated");
  auto body = bytes.first(bytes.size() - 4);
  ByteReader trailer(bytes.last(4));
  if (trailer.get_u32() != crc32(body)) throw ChecksumError(std::string(what) + ": checksum mismatch");
  return body;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  auto size = static_cast<std::size_t>(in.tellg());
  Bytes out(size);
  in.seekg(0);
  if (size > 0 && !in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size)))
    throw IoError("short read on " + path.string());
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace tilegraph
