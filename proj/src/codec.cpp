#include "tilegraph/codec.hpp"

#include <limits>

#include <lz4.h>
#include <zlib.h>

#include "tilegraph/errors.hpp"

namespace tilegraph {
namespace {

Bytes deflate_bytes(std::span<const std::uint8_t> raw, int level) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  Bytes out(bound);
  int rc = compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), level);
  if (rc != Z_OK) throw Error("deflate failed (" + std::to_string(rc) + ")");
  out.resize(bound);
  return out;
}

Bytes inflate_bytes(std::span<const std::uint8_t> packed, std::size_t raw_size) {
  Bytes out(raw_size);
  uLongf len = static_cast<uLongf>(raw_size);
  int rc = uncompress(out.data(), &len, packed.data(), static_cast<uLong>(packed.size()));
  if (rc != Z_OK || len != raw_size) throw FormatError("inflate failed");
  return out;
}

}  // namespace

std::string_view to_string(CodecRole role) {
  switch (role) {
    case CodecRole::none: return "none";
    case CodecRole::fast: return "lz4";
    case CodecRole::balanced: return "deflate-1";
    case CodecRole::high: return "deflate-3";
  }
  return "?";
}

Bytes compress(CodecRole role, std::span<const std::uint8_t> raw) {
  switch (role) {
    case CodecRole::none: return Bytes(raw.begin(), raw.end());
    case CodecRole::fast: {
      if (raw.size() > static_cast<std::size_t>(LZ4_MAX_INPUT_SIZE)) throw CapacityError("lz4: input too large");
      Bytes out(static_cast<std::size_t>(LZ4_compressBound(static_cast<int>(raw.size()))));
      int n = LZ4_compress_default(reinterpret_cast<const char*>(raw.data()), reinterpret_cast<char*>(out.data()),
                                   static_cast<int>(raw.size()), static_cast<int>(out.size()));
      if (n <= 0 && !raw.empty()) throw Error("lz4 compression failed");
      out.resize(static_cast<std::size_t>(n));
      return out;
    }
    case CodecRole::balanced: return deflate_bytes(raw, 1);
    case CodecRole::high: return deflate_bytes(raw, 3);
  }
  throw DomainError("unknown codec");
}

Bytes decompress(CodecRole role, std::span<const std::uint8_t> packed, std::size_t raw_size) {
  switch (role) {
    case CodecRole::none:
      if (packed.size() != raw_size) throw FormatError("raw payload length mismatch");
      return Bytes(packed.begin(), packed.end());
    case CodecRole::fast: {
      if (raw_size > static_cast<std::size_t>(std::numeric_limits<int>::max()) ||
          packed.size() > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        throw FormatError("lz4: length out of range");
      Bytes out(raw_size);
      int n = LZ4_decompress_safe(reinterpret_cast<const char*>(packed.data()), reinterpret_cast<char*>(out.data()),
                                  static_cast<int>(packed.size()), static_cast<int>(raw_size));
      if (n < 0 || static_cast<std::size_t>(n) != raw_size) throw FormatError("lz4 decompression failed");
      return out;
    }
    case CodecRole::balanced:
    case CodecRole::high: return inflate_bytes(packed, raw_size);
  }
  throw DomainError("unknown codec");
}

}  // namespace tilegraph
