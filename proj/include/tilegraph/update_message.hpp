#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tilegraph/byte_io.hpp"
#include "tilegraph/codec.hpp"
#include "tilegraph/types.hpp"
#include "tilegraph/vertex_state.hpp"

namespace tilegraph {

struct TileDescriptor;

struct VertexUpdate {
  VertexId vertex = 0;
  double value = 0.0;
  friend bool operator==(const VertexUpdate&, const VertexUpdate&) = default;
};

/// Updates produced by processing one tile, ascending by vertex.
struct UpdateBatch {
  TileId tile_id = 0;
  std::vector<VertexUpdate> updates;
};

enum class CommMode : std::uint8_t { dense, sparse, hybrid };
CommMode parse_comm_mode(std::string_view text);

struct SparsityPolicy {
  CommMode mode = CommMode::hybrid;
  /// Sparse is chosen when the unchanged fraction of the tile exceeds this.
  double threshold = 0.8;
};

enum class FrameKind : std::uint8_t { dense = 0, sparse = 1, barrier = 2 };
enum class WireCodec : std::uint8_t { none = 0, fast = 1, high = 2 };
WireCodec parse_wire_codec(std::string_view text);
CodecRole codec_role(WireCodec codec);

/// Unchanged targets over all targets of a tile; 1 for an empty range.
double sparsity_ratio(std::uint32_t num_targets, std::size_t updated);
FrameKind choose_encoding(const SparsityPolicy& policy, std::uint32_t num_targets, std::size_t updated);

/// Decoded frame. `payload` is always the uncompressed payload.
struct UpdateMessage {
  std::uint32_t superstep = 0;
  std::uint16_t origin = 0;
  FrameKind kind = FrameKind::sparse;
  WireCodec codec = WireCodec::none;
  TileId tile_id = 0;
  VertexId first_target = 0;
  std::uint32_t num_targets = 0;
  Bytes payload;

  friend bool operator==(const UpdateMessage&, const UpdateMessage&) = default;
};

/// Frame: "TGM1" | superstep u32 | origin u16 | kind u8 | codec u8 | tile_id u32
///        | first_target u32 | num_targets u32 | uncompressed_len u32 | payload | crc32
inline constexpr std::size_t kFrameHeaderBytes = 28;

/// Dense payload: bitvector ceil(n/8) bytes (LSB-first) + n x f64 over the
/// whole target range. Sparse payload: count u32 + count x (u32 id, f64 value).
std::size_t dense_payload_bytes(std::uint32_t num_targets);
std::size_t sparse_payload_bytes(std::size_t pairs);

UpdateMessage encode_updates(const UpdateBatch& batch, const TileDescriptor& tile, const SparsityPolicy& policy,
                             WireCodec codec, std::uint32_t superstep, std::uint16_t origin);
UpdateMessage make_barrier_message(std::uint32_t superstep, std::uint16_t origin, std::uint64_t owned_updates);
std::uint64_t barrier_count(const UpdateMessage& msg);

/// Compresses the payload per the codec and appends the checksum.
Bytes serialize_frame(const UpdateMessage& msg);
/// Validates magic, checksum and lengths, then decompresses the payload.
UpdateMessage parse_frame(std::span<const std::uint8_t> frame);
/// Header fields only, without checksum verification.
UpdateMessage peek_frame_header(std::span<const std::uint8_t> frame);

/// Update set carried by a dense or sparse message, ascending by vertex.
std::vector<VertexUpdate> decode_updates(const UpdateMessage& msg);

/// Stages every carried update into the next-superstep slots. Throws
/// ProtocolError on a superstep mismatch or a vertex outside the states.
std::size_t decode_and_apply(const UpdateMessage& msg, VertexStateArrays& states, std::uint32_t current_superstep);

}  // namespace tilegraph
