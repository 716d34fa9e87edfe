#include "tilegraph/dataset.hpp"

#include <numeric>

#include "tilegraph/errors.hpp"

namespace tilegraph {
namespace {

constexpr char kManifestMagic[] = "TGDS";
constexpr char kU32ArrayMagic[] = "GHA4";
constexpr char kU64ArrayMagic[] = "GHA8";

void put_bloom(ByteWriter& w, const BloomFilter& f) {
  w.put_u64(f.num_bits());
  w.put_u32(f.num_hashes());
  for (auto word : f.words()) w.put_u64(word);
}

BloomFilter get_bloom(ByteReader& r) {
  auto bits = r.get_u64();
  auto hashes = r.get_u32();
  if (bits % 64 != 0 || bits / 64 > r.remaining() / 8) throw FormatError("manifest: bad bloom filter size");
  std::vector<std::uint64_t> words(bits / 64);
  for (auto& w : words) w = r.get_u64();
  return BloomFilter(bits, hashes, std::move(words));
}

}  // namespace

std::uint64_t DatasetManifest::total_tile_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& d : tiles) total += d.byte_length;
  return total;
}

void validate_manifest(const DatasetManifest& m) {
  const auto& b = m.splitters.boundaries;
  if (b.empty() || b.front() != 0 || b.back() != m.vertex_count)
    throw ConsistencyError("manifest: splitter table does not span [0, |V|]");
  for (std::size_t i = 1; i < b.size(); ++i)
    if (b[i] <= b[i - 1]) throw ConsistencyError("manifest: splitter boundaries not strictly increasing");
  if (m.tiles.size() != m.splitters.tile_count()) throw ConsistencyError("manifest: tile count != splitter count");
  std::uint64_t edges = 0;
  for (std::size_t t = 0; t < m.tiles.size(); ++t) {
    const auto& d = m.tiles[t];
    if (d.tile_id != t) throw ConsistencyError("manifest: descriptors out of order");
    if (d.first_target != b[t] || d.first_target + d.num_targets != b[t + 1])
      throw ConsistencyError("manifest: descriptor range disagrees with splitters");
    if (d.byte_length != encoded_tile_size(d.num_targets, d.num_edges, m.weighted))
      throw ConsistencyError("manifest: descriptor byte_length disagrees with counts");
    edges += d.num_edges;
  }
  if (edges != m.edge_count) throw ConsistencyError("manifest: tile edge counts do not sum to |E|");
}

Bytes encode_manifest(const DatasetManifest& m) {
  ByteWriter w;
  w.put_tag(kManifestMagic);
  w.put_u32(m.format_version);
  w.put_u64(m.vertex_count);
  w.put_u64(m.edge_count);
  w.put_u32(m.weighted ? 1u : 0u);
  w.put_f64(m.min_weight);
  w.put_u64(m.avg_tile_size);
  w.put_f64(m.avg_degree);
  w.put_u32(static_cast<std::uint32_t>(m.tiles.size()));
  for (auto v : m.splitters.boundaries) w.put_u32(v);
  for (const auto& d : m.tiles) {
    w.put_u32(d.tile_id);
    w.put_u32(d.first_target);
    w.put_u32(d.num_targets);
    w.put_u64(d.num_edges);
    w.put_u64(d.byte_length);
    put_bloom(w, d.sources);
  }
  w.put_u32(static_cast<std::uint32_t>(m.id_remap_file.size()));
  w.put_tag(m.id_remap_file);
  w.put_crc32();
  return std::move(w).take();
}

DatasetManifest decode_manifest(std::span<const std::uint8_t> bytes) {
  ByteReader head(bytes);
  if (!head.peek_tag(kManifestMagic)) throw FormatError("manifest: bad magic");
  ByteReader r(verify_crc32_trailer(bytes, "manifest"));
  r.skip(4);
  DatasetManifest m;
  m.format_version = r.get_u32();
  if (m.format_version != DatasetManifest::kFormatVersion)
    throw UnsupportedVersionError("manifest: unsupported format version " + std::to_string(m.format_version));
  m.vertex_count = r.get_u64();
  m.edge_count = r.get_u64();
  m.weighted = r.get_u32() != 0;
  m.min_weight = r.get_f64();
  m.avg_tile_size = r.get_u64();
  m.avg_degree = r.get_f64();
  auto tile_count = r.get_u32();
  if (tile_count > r.remaining() / 4) throw FormatError("manifest: truncated splitter table");
  m.splitters.boundaries.resize(std::size_t{tile_count} + 1);
  for (auto& v : m.splitters.boundaries) v = r.get_u32();
  m.tiles.resize(tile_count);
  for (auto& d : m.tiles) {
    d.tile_id = r.get_u32();
    d.first_target = r.get_u32();
    d.num_targets = r.get_u32();
    d.num_edges = r.get_u64();
    d.byte_length = r.get_u64();
    d.sources = get_bloom(r);
  }
  auto name_len = r.get_u32();
  auto name = r.get_bytes(name_len);
  m.id_remap_file.assign(name.begin(), name.end());
  if (r.remaining() != 0) throw FormatError("manifest: trailing bytes");
  try {
    validate_manifest(m);
  } catch (const ConsistencyError& e) {
    throw FormatError(e.what());
  }
  return m;
}

Bytes encode_u32_array(std::span<const std::uint32_t> values) {
  ByteWriter w(16 + 4 * values.size());
  w.put_tag(kU32ArrayMagic);
  w.put_u64(values.size());
  for (auto v : values) w.put_u32(v);
  w.put_crc32();
  return std::move(w).take();
}

std::vector<std::uint32_t> decode_u32_array(std::span<const std::uint8_t> bytes) {
  ByteReader head(bytes);
  if (!head.peek_tag(kU32ArrayMagic)) throw FormatError("u32 array: bad magic");
  ByteReader r(verify_crc32_trailer(bytes, "u32 array"));
  r.skip(4);
  auto n = r.get_u64();
  if (n != r.remaining() / 4 || r.remaining() % 4 != 0) throw FormatError("u32 array: length mismatch");
  std::vector<std::uint32_t> out(n);
  for (auto& v : out) v = r.get_u32();
  return out;
}

Bytes encode_u64_array(std::span<const std::uint64_t> values) {
  ByteWriter w(16 + 8 * values.size());
  w.put_tag(kU64ArrayMagic);
  w.put_u64(values.size());
  for (auto v : values) w.put_u64(v);
  w.put_crc32();
  return std::move(w).take();
}

std::vector<std::uint64_t> decode_u64_array(std::span<const std::uint8_t> bytes) {
  ByteReader head(bytes);
  if (!head.peek_tag(kU64ArrayMagic)) throw FormatError("u64 array: bad magic");
  ByteReader r(verify_crc32_trailer(bytes, "u64 array"));
  r.skip(4);
  auto n = r.get_u64();
  if (n != r.remaining() / 8 || r.remaining() % 8 != 0) throw FormatError("u64 array: length mismatch");
  std::vector<std::uint64_t> out(n);
  for (auto& v : out) v = r.get_u64();
  return out;
}

std::filesystem::path dataset_files::tile_path(const std::filesystem::path& root, TileId t) {
  return root / kTileDir / ("tile_" + std::to_string(t) + ".bin");
}

Dataset Dataset::open(const std::filesystem::path& dir) {
  auto bytes = read_file(dir / dataset_files::kManifest);
  return Dataset(dir, decode_manifest(bytes));
}

Bytes Dataset::read_tile_bytes(TileId t) const {
  if (t >= manifest_.tiles.size()) throw DomainError("tile " + std::to_string(t) + " not in dataset");
  auto bytes = read_file(dataset_files::tile_path(root_, t));
  if (bytes.size() != manifest_.tiles[t].byte_length)
    throw FormatError("tile " + std::to_string(t) + ": file length disagrees with manifest");
  return bytes;
}

Tile Dataset::load_tile(TileId t) const {
  auto tile = decode_tile(read_tile_bytes(t));
  const auto& d = manifest_.tiles[t];
  if (tile.tile_id != t || tile.first_target != d.first_target || tile.num_targets != d.num_targets ||
      tile.num_edges() != d.num_edges || tile.weighted != manifest_.weighted)
    throw ConsistencyError("tile " + std::to_string(t) + ": header disagrees with manifest");
  return tile;
}

std::vector<std::uint32_t> Dataset::load_in_degree() const {
  auto v = decode_u32_array(read_file(root_ / dataset_files::kInDegree));
  if (v.size() != manifest_.vertex_count) throw ConsistencyError("in-degree array length != |V|");
  return v;
}

std::vector<std::uint32_t> Dataset::load_out_degree() const {
  auto v = decode_u32_array(read_file(root_ / dataset_files::kOutDegree));
  if (v.size() != manifest_.vertex_count) throw ConsistencyError("out-degree array length != |V|");
  return v;
}

std::vector<RawVertexId> Dataset::load_id_remap() const {
  if (manifest_.id_remap_file.empty()) {
    std::vector<RawVertexId> ids(manifest_.vertex_count);
    std::iota(ids.begin(), ids.end(), RawVertexId{0});
    return ids;
  }
  auto v = decode_u64_array(read_file(root_ / manifest_.id_remap_file));
  if (v.size() != manifest_.vertex_count) throw ConsistencyError("id remap length != |V|");
  return v;
}

}  // namespace tilegraph
