#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "tilegraph/byte_io.hpp"

namespace tilegraph {

/// Compression roles shared by the edge cache and the broadcast layer.
/// fast = LZ4, balanced = deflate level 1, high = deflate level 3.
enum class CodecRole : std::uint8_t { none, fast, balanced, high };

std::string_view to_string(CodecRole role);

Bytes compress(CodecRole role, std::span<const std::uint8_t> raw);
/// `raw_size` must be the exact uncompressed length; anything else is a FormatError.
Bytes decompress(CodecRole role, std::span<const std::uint8_t> packed, std::size_t raw_size);

}  // namespace tilegraph
