#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tilegraph/dataset.hpp"
#include "tilegraph/tile.hpp"
#include "tilegraph/types.hpp"

namespace tilegraph {

/// Edge over dense ids. `weight` is meaningful only when the owning stream is
/// weighted; unweighted edges carry 1.
struct EdgeRecord {
  VertexId src = 0;
  VertexId dst = 0;
  double weight = 1.0;

  friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

/// Edge as read from text, before id compaction.
struct RawEdge {
  RawVertexId src = 0;
  RawVertexId dst = 0;
  std::optional<double> weight;
};

/// Parses one line of the `src dst [weight]` format. Returns nullopt for
/// blank and `#` comment lines. Tolerates a trailing CR.
std::optional<RawEdge> parse_edge_line(std::string_view line, std::size_t line_number);

/// Replayable sequence of dense edges. Ingest makes several passes.
class EdgeStream {
 public:
  virtual ~EdgeStream() = default;
  virtual bool weighted() const = 0;
  virtual void for_each(const std::function<void(const EdgeRecord&)>& sink) const = 0;
};

class VectorEdgeStream final : public EdgeStream {
 public:
  VectorEdgeStream(std::span<const EdgeRecord> edges, bool weighted) : edges_(edges), weighted_(weighted) {}
  bool weighted() const override { return weighted_; }
  void for_each(const std::function<void(const EdgeRecord&)>& sink) const override {
    for (const auto& e : edges_) sink(e);
  }

 private:
  std::span<const EdgeRecord> edges_;
  bool weighted_;
};

struct DegreeArrays {
  std::vector<std::uint32_t> in_degree;
  std::vector<std::uint32_t> out_degree;

  std::uint64_t vertex_count() const noexcept { return in_degree.size(); }
  std::uint64_t edge_count() const noexcept;

  friend bool operator==(const DegreeArrays&, const DegreeArrays&) = default;
};

/// Exact in/out degrees; |V| is max id + 1 (ids are assumed dense).
DegreeArrays compute_degrees(const EdgeStream& edges);

/// Scans vertices in id order accumulating in-degrees; once the running sum
/// reaches `avg_tile_size` at vertex v the tile closes at v+1. A trailing run
/// of zero-in-degree vertices is folded into the last closed tile.
SplitterTable build_splitters(std::span<const std::uint32_t> in_degree, std::uint64_t avg_tile_size);

struct PartitionOptions {
  /// Budget for edges held in memory while bucketing; larger datasets spill
  /// per-bucket files under the output directory.
  std::uint64_t memory_budget_bytes = 256ULL << 20;
  unsigned threads = 0;  // 0 = hardware concurrency
  /// dense -> raw id table to persist; nullptr when ids are already dense.
  const std::vector<RawVertexId>* id_remap = nullptr;
};

/// Writes tiles, degree arrays and the manifest into `out_dir`. On failure
/// every file this call created is removed.
DatasetManifest partition_into_tiles(const EdgeStream& edges, const SplitterTable& splitters,
                                     const DegreeArrays& degrees, std::uint64_t avg_tile_size,
                                     const std::filesystem::path& out_dir, const PartitionOptions& options = {});

struct IngestOptions {
  std::uint64_t avg_tile_size = 16ULL << 20;
  PartitionOptions partition;
};

/// Full pipeline: text edge list -> compacted ids -> degrees -> splitters -> tiles.
DatasetManifest ingest_edge_list(std::istream& text, const std::filesystem::path& out_dir,
                                 const IngestOptions& options = {});
DatasetManifest ingest_edge_list_file(const std::filesystem::path& input, const std::filesystem::path& out_dir,
                                      const IngestOptions& options = {});

}  // namespace tilegraph
