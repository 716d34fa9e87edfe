#include "tilegraph/update_message.hpp"

#include <limits>
#include <string>

#include "tilegraph/dataset.hpp"
#include "tilegraph/errors.hpp"

namespace tilegraph {
namespace {

constexpr char kFrameMagic[] = "TGM1";

}  // namespace

CommMode parse_comm_mode(std::string_view text) {
  if (text == "dense") return CommMode::dense;
  if (text == "sparse") return CommMode::sparse;
  if (text == "hybrid") return CommMode::hybrid;
  throw DomainError("comm mode must be dense, sparse or hybrid (got '" + std::string(text) + "')");
}

WireCodec parse_wire_codec(std::string_view text) {
  if (text == "none") return WireCodec::none;
  if (text == "fast") return WireCodec::fast;
  if (text == "high") return WireCodec::high;
  throw DomainError("compression must be none, fast or high (got '" + std::string(text) + "')");
}

CodecRole codec_role(WireCodec codec) {
  switch (codec) {
    case WireCodec::none: return CodecRole::none;
    case WireCodec::fast: return CodecRole::fast;
    case WireCodec::high: return CodecRole::high;
  }
  throw FormatError("unknown wire codec");
}

double sparsity_ratio(std::uint32_t num_targets, std::size_t updated) {
  if (num_targets == 0) return 1.0;
  return static_cast<double>(num_targets - updated) / static_cast<double>(num_targets);
}

FrameKind choose_encoding(const SparsityPolicy& policy, std::uint32_t num_targets, std::size_t updated) {
  switch (policy.mode) {
    case CommMode::dense: return FrameKind::dense;
    case CommMode::sparse: return FrameKind::sparse;
    case CommMode::hybrid:
      return sparsity_ratio(num_targets, updated) > policy.threshold ? FrameKind::sparse : FrameKind::dense;
  }
  throw DomainError("unknown comm mode");
}

std::size_t dense_payload_bytes(std::uint32_t num_targets) {
  return (std::size_t{num_targets} + 7) / 8 + 8 * std::size_t{num_targets};
}

std::size_t sparse_payload_bytes(std::size_t pairs) { return 4 + 12 * pairs; }

UpdateMessage encode_updates(const UpdateBatch& batch, const TileDescriptor& tile, const SparsityPolicy& policy,
                             WireCodec codec, std::uint32_t superstep, std::uint16_t origin) {
  UpdateMessage msg;
  msg.superstep = superstep;
  msg.origin = origin;
  msg.codec = codec;
  msg.tile_id = tile.tile_id;
  msg.first_target = tile.first_target;
  msg.num_targets = tile.num_targets;
  msg.kind = choose_encoding(policy, tile.num_targets, batch.updates.size());

  const std::uint64_t end = std::uint64_t{tile.first_target} + tile.num_targets;
  VertexId prev = 0;
  for (std::size_t i = 0; i < batch.updates.size(); ++i) {
    auto v = batch.updates[i].vertex;
    if (v < tile.first_target || v >= end) throw DomainError("update for vertex outside the tile's target range");
    if (i > 0 && v <= prev) throw DomainError("batch updates must be strictly ascending by vertex");
    prev = v;
  }

  if (msg.kind == FrameKind::dense) {
    ByteWriter w(dense_payload_bytes(tile.num_targets));
    Bytes bits((std::size_t{tile.num_targets} + 7) / 8, 0);
    std::vector<double> values(tile.num_targets, 0.0);
    for (const auto& u : batch.updates) {
      auto local = u.vertex - tile.first_target;
      bits[local / 8] |= static_cast<std::uint8_t>(1u << (local % 8));
      values[local] = u.value;
    }
    w.put_bytes(bits);
    for (double x : values) w.put_f64(x);
    msg.payload = std::move(w).take();
  } else {
    ByteWriter w(sparse_payload_bytes(batch.updates.size()));
    w.put_u32(static_cast<std::uint32_t>(batch.updates.size()));
    for (const auto& u : batch.updates) {
      w.put_u32(u.vertex);
      w.put_f64(u.value);
    }
    msg.payload = std::move(w).take();
  }
  return msg;
}

UpdateMessage make_barrier_message(std::uint32_t superstep, std::uint16_t origin, std::uint64_t owned_updates) {
  UpdateMessage msg;
  msg.superstep = superstep;
  msg.origin = origin;
  msg.kind = FrameKind::barrier;
  msg.codec = WireCodec::none;
  ByteWriter w(8);
  w.put_u64(owned_updates);
  msg.payload = std::move(w).take();
  return msg;
}

std::uint64_t barrier_count(const UpdateMessage& msg) {
  if (msg.kind != FrameKind::barrier || msg.payload.size() != 8) throw ProtocolError("not a barrier frame");
  ByteReader r(msg.payload);
  return r.get_u64();
}

Bytes serialize_frame(const UpdateMessage& msg) {
  if (msg.payload.size() > std::numeric_limits<std::uint32_t>::max()) throw CapacityError("frame payload too large");
  Bytes packed = msg.codec == WireCodec::none ? Bytes{} : compress(codec_role(msg.codec), msg.payload);
  const Bytes& body = msg.codec == WireCodec::none ? msg.payload : packed;
  ByteWriter w(kFrameHeaderBytes + body.size() + 4);
  w.put_tag(kFrameMagic);
  w.put_u32(msg.superstep);
  w.put_u16(msg.origin);
  w.put_u8(static_cast<std::uint8_t>(msg.kind));
  w.put_u8(static_cast<std::uint8_t>(msg.codec));
  w.put_u32(msg.tile_id);
  w.put_u32(msg.first_target);
  w.put_u32(msg.num_targets);
  w.put_u32(static_cast<std::uint32_t>(msg.payload.size()));
  w.put_bytes(body);
  w.put_crc32();
  return std::move(w).take();
}

UpdateMessage peek_frame_header(std::span<const std::uint8_t> frame) {
  ByteReader r(frame);
  if (!r.peek_tag(kFrameMagic)) throw FormatError("frame: bad magic");
  if (frame.size() < kFrameHeaderBytes + 4) throw FormatError("frame: truncated");
  r.skip(4);
  UpdateMessage msg;
  msg.superstep = r.get_u32();
  msg.origin = r.get_u16();
  auto kind = r.get_u8();
  auto codec = r.get_u8();
  if (kind > 2) throw FormatError("frame: unknown kind " + std::to_string(kind));
  if (codec > 2) throw FormatError("frame: unknown codec " + std::to_string(codec));
  msg.kind = static_cast<FrameKind>(kind);
  msg.codec = static_cast<WireCodec>(codec);
  msg.tile_id = r.get_u32();
  msg.first_target = r.get_u32();
  msg.num_targets = r.get_u32();
  return msg;
}

UpdateMessage parse_frame(std::span<const std::uint8_t> frame) {
  UpdateMessage msg = peek_frame_header(frame);
  ByteReader r(verify_crc32_trailer(frame, "frame"));
  r.skip(kFrameHeaderBytes - 4);
  auto raw_len = r.get_u32();
  auto body = r.get_bytes(r.remaining());
  msg.payload = decompress(codec_role(msg.codec), body, raw_len);
  return msg;
}

std::vector<VertexUpdate> decode_updates(const UpdateMessage& msg) {
  std::vector<VertexUpdate> out;
  const std::uint64_t end = std::uint64_t{msg.first_target} + msg.num_targets;
  if (msg.kind == FrameKind::dense) {
    if (msg.payload.size() != dense_payload_bytes(msg.num_targets)) throw FormatError("dense payload: bad length");
    ByteReader r(msg.payload);
    auto bits = r.get_bytes((std::size_t{msg.num_targets} + 7) / 8);
    for (std::uint32_t i = 0; i < msg.num_targets; ++i) {
      double x = r.get_f64();
      if (bits[i / 8] & (1u << (i % 8))) out.push_back({msg.first_target + i, x});
    }
  } else if (msg.kind == FrameKind::sparse) {
    ByteReader r(msg.payload);
    auto n = r.get_u32();
    if (msg.payload.size() != sparse_payload_bytes(n)) throw FormatError("sparse payload: bad length");
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      VertexUpdate u{r.get_u32(), r.get_f64()};
      if (u.vertex < msg.first_target || u.vertex >= end) throw FormatError("sparse payload: vertex outside tile");
      if (!out.empty() && u.vertex <= out.back().vertex) throw FormatError("sparse payload: ids not ascending");
      out.push_back(u);
    }
  } else {
    throw ProtocolError("barrier frame carries no updates");
  }
  return out;
}

std::size_t decode_and_apply(const UpdateMessage& msg, VertexStateArrays& states, std::uint32_t current_superstep) {
  if (msg.superstep != current_superstep)
    throw ProtocolError("update for superstep " + std::to_string(msg.superstep) + " during superstep " +
                        std::to_string(current_superstep));
  if (std::uint64_t{msg.first_target} + msg.num_targets > states.size())
    throw ProtocolError("update range exceeds the vertex arrays");
  auto updates = decode_updates(msg);
  for (const auto& u : updates) states.stage(u.vertex, u.value);
  return updates.size();
}

}  // namespace tilegraph
