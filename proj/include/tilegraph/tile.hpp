#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tilegraph/byte_io.hpp"
#include "tilegraph/types.hpp"

namespace tilegraph {

/// Vertex-id boundaries of the tiles: tile t owns targets in
/// [boundaries[t], boundaries[t+1]). boundaries.front() == 0 and
/// boundaries.back() == |V|.
struct SplitterTable {
  std::vector<VertexId> boundaries{0};

  std::size_t tile_count() const noexcept { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  VertexId vertex_count() const noexcept { return boundaries.empty() ? 0 : boundaries.back(); }

  friend bool operator==(const SplitterTable&, const SplitterTable&) = default;
};

/// Tile owning target `v`. Throws DomainError when v >= |V|.
TileId tile_of_vertex(VertexId v, const SplitterTable& splitters);

/// In-edges of one tile's target range in CSR form. Sources of each target
/// are sorted ascending; `val` is empty for unweighted datasets.
struct Tile {
  TileId tile_id = 0;
  VertexId first_target = 0;
  std::uint32_t num_targets = 0;
  bool weighted = false;
  std::vector<std::uint32_t> row{0};
  std::vector<VertexId> col;
  std::vector<double> val;

  std::uint64_t num_edges() const noexcept { return col.size(); }

  std::span<const VertexId> sources_of(std::uint32_t local_target) const noexcept {
    return {col.data() + row[local_target], col.data() + row[local_target + 1]};
  }
  std::span<const double> weights_of(std::uint32_t local_target) const noexcept {
    if (!weighted) return {};
    return {val.data() + row[local_target], val.data() + row[local_target + 1]};
  }

  friend bool operator==(const Tile&, const Tile&) = default;
};

/// Tile file layout, little-endian:
///   "TGT1" | tile_id u32 | first_target u32 | num_targets u32 | flags u32 (bit0 weighted)
///   | num_edges u64 | row (num_targets+1) x u32 | col num_edges x u32
///   | [val num_edges x f64] | crc32 u32
inline constexpr std::size_t kTileHeaderBytes = 28;
inline constexpr char kTileMagicPrefix[] = "TGT";
inline constexpr char kTileFormatVersion = '1';

/// Throws ConsistencyError when the CSR invariants do not hold and
/// CapacityError when counts do not fit the format.
Bytes encode_tile(const Tile& tile);
/// Validates magic, version, lengths, checksum and CSR invariants.
Tile decode_tile(std::span<const std::uint8_t> bytes);
/// Size encode_tile would produce.
std::uint64_t encoded_tile_size(std::uint32_t num_targets, std::uint64_t num_edges, bool weighted);

void validate_tile(const Tile& tile);

}  // namespace tilegraph
