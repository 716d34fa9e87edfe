#include "tilegraph/tile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tilegraph/errors.hpp"

namespace tilegraph {

TileId tile_of_vertex(VertexId v, const SplitterTable& splitters) {
  const auto& b = splitters.boundaries;
  if (b.size() < 2 || v >= b.back())
    throw DomainError("vertex " + std::to_string(v) + " outside [0, " + std::to_string(splitters.vertex_count()) + ")");
  auto it = std::upper_bound(b.begin(), b.end(), v);
  return static_cast<TileId>(std::distance(b.begin(), it) - 1);
}

std::uint64_t encoded_tile_size(std::uint32_t num_targets, std::uint64_t num_edges, bool weighted) {
  return kTileHeaderBytes + 4ULL * (std::uint64_t{num_targets} + 1) + 4ULL * num_edges +
         (weighted ? 8ULL * num_edges : 0) + 4;
}

void validate_tile(const Tile& tile) {
  if (tile.row.size() != std::size_t{tile.num_targets} + 1) throw ConsistencyError("tile: row length != num_targets + 1");
  if (tile.row.front() != 0) throw ConsistencyError("tile: row[0] != 0");
  if (!std::is_sorted(tile.row.begin(), tile.row.end())) throw ConsistencyError("tile: row offsets decrease");
  if (tile.row.back() != tile.col.size()) throw ConsistencyError("tile: row[num_targets] != num_edges");
  if (tile.weighted ? tile.val.size() != tile.col.size() : !tile.val.empty())
    throw ConsistencyError("tile: val block does not match the weighted flag");
  if (std::uint64_t{tile.first_target} + tile.num_targets > kMaxVertexCount)
    throw CapacityError("tile: target range exceeds 32-bit ids");
}

Bytes encode_tile(const Tile& tile) {
  if (tile.col.size() > std::numeric_limits<std::uint32_t>::max())
    throw CapacityError("tile: num_edges exceeds 32-bit row offsets");
  validate_tile(tile);

  ByteWriter w(encoded_tile_size(tile.num_targets, tile.num_edges(), tile.weighted));
  w.put_tag(kTileMagicPrefix);
  w.put_u8(static_cast<std::uint8_t>(kTileFormatVersion));
  w.put_u32(tile.tile_id);
  w.put_u32(tile.first_target);
  w.put_u32(tile.num_targets);
  w.put_u32(tile.weighted ? 1u : 0u);
  w.put_u64(tile.num_edges());
  for (auto r : tile.row) w.put_u32(r);
  for (auto c : tile.col) w.put_u32(c);
  if (tile.weighted)
    for (auto v : tile.val) w.put_f64(v);
  w.put_crc32();
  return std::move(w).take();
}

Tile decode_tile(std::span<const std::uint8_t> bytes) {
  ByteReader header(bytes);
  if (!header.peek_tag(kTileMagicPrefix)) throw FormatError("tile: bad magic");
  header.skip(3);
  auto version = header.get_u8();
  if (version != static_cast<std::uint8_t>(kTileFormatVersion))
    throw UnsupportedVersionError("tile: unsupported format version '" + std::string(1, static_cast<char>(version)) + "'");

  ByteReader r(verify_crc32_trailer(bytes, "tile"));
  r.skip(4);
  Tile t;
  t.tile_id = r.get_u32();
  t.first_target = r.get_u32();
  t.num_targets = r.get_u32();
  auto flags = r.get_u32();
  if ((flags & ~1u) != 0) throw FormatError("tile: unknown flag bits");
  t.weighted = (flags & 1u) != 0;
  auto num_edges = r.get_u64();
  if (encoded_tile_size(t.num_targets, num_edges, t.weighted) != bytes.size())
    throw FormatError("tile: length does not match header counts");

  t.row.resize(std::size_t{t.num_targets} + 1);
  for (auto& x : t.row) x = r.get_u32();
  t.col.resize(num_edges);
  for (auto& x : t.col) x = r.get_u32();
  if (t.weighted) {
    t.val.resize(num_edges);
    for (auto& x : t.val) x = r.get_f64();
  }
  try {
    validate_tile(t);
  } catch (const ConsistencyError& e) {
    throw FormatError(e.what());
  }
  return t;
}

}  // namespace tilegraph
