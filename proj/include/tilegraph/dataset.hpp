#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tilegraph/bloom_filter.hpp"
#include "tilegraph/byte_io.hpp"
#include "tilegraph/tile.hpp"
#include "tilegraph/types.hpp"

namespace tilegraph {

struct TileDescriptor {
  TileId tile_id = 0;
  VertexId first_target = 0;
  std::uint32_t num_targets = 0;
  std::uint64_t num_edges = 0;
  std::uint64_t byte_length = 0;
  /// Holds every distinct source id of the tile.
  BloomFilter sources;

  friend bool operator==(const TileDescriptor&, const TileDescriptor&) = default;
};

struct DatasetManifest {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  std::uint64_t vertex_count = 0;
  std::uint64_t edge_count = 0;
  bool weighted = false;
  /// Smallest edge weight (1.0 when unweighted or empty).
  double min_weight = 1.0;
  std::uint64_t avg_tile_size = 0;
  double avg_degree = 0.0;
  SplitterTable splitters;
  std::vector<TileDescriptor> tiles;
  /// File holding dense->raw ids; empty when the input ids were already dense.
  std::string id_remap_file;

  std::uint32_t tile_count() const noexcept { return static_cast<std::uint32_t>(tiles.size()); }
  std::uint64_t total_tile_bytes() const noexcept;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

Bytes encode_manifest(const DatasetManifest& manifest);
DatasetManifest decode_manifest(std::span<const std::uint8_t> bytes);
/// Checks the cross-field invariants (edge sums, descriptor order, splitters).
void validate_manifest(const DatasetManifest& manifest);

Bytes encode_u32_array(std::span<const std::uint32_t> values);
std::vector<std::uint32_t> decode_u32_array(std::span<const std::uint8_t> bytes);
Bytes encode_u64_array(std::span<const std::uint64_t> values);
std::vector<std::uint64_t> decode_u64_array(std::span<const std::uint8_t> bytes);

namespace dataset_files {
inline constexpr const char* kManifest = "manifest";
inline constexpr const char* kInDegree = "indeg.bin";
inline constexpr const char* kOutDegree = "outdeg.bin";
inline constexpr const char* kIdRemap = "idmap.bin";
inline constexpr const char* kTileDir = "tiles";
std::filesystem::path tile_path(const std::filesystem::path& root, TileId t);
}  // namespace dataset_files

/// Read-only handle on a dataset directory. Immutable; safe to share between
/// threads.
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& dir);

  const std::filesystem::path& root() const noexcept { return root_; }
  const DatasetManifest& manifest() const noexcept { return manifest_; }

  /// Raw encoded tile file; length is checked against the descriptor.
  Bytes read_tile_bytes(TileId t) const;
  Tile load_tile(TileId t) const;

  std::vector<std::uint32_t> load_in_degree() const;
  std::vector<std::uint32_t> load_out_degree() const;
  /// dense id -> raw id. Identity when no remap file exists.
  std::vector<RawVertexId> load_id_remap() const;

 private:
  Dataset(std::filesystem::path root, DatasetManifest manifest) : root_(std::move(root)), manifest_(std::move(manifest)) {}
  std::filesystem::path root_;
  DatasetManifest manifest_;
};

}  // namespace tilegraph
