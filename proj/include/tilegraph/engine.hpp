#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "tilegraph/communicator.hpp"
#include "tilegraph/dataset.hpp"
#include "tilegraph/edge_cache.hpp"
#include "tilegraph/tile.hpp"
#include "tilegraph/transport.hpp"
#include "tilegraph/update_message.hpp"
#include "tilegraph/vertex_state.hpp"
#include "tilegraph/worker_pool.hpp"

namespace tilegraph {

/// In-edges of one target inside a tile. `weights` is empty for unweighted
/// datasets.
struct InEdges {
  std::span<const VertexId> sources;
  std::span<const double> weights;
};

/// Gather-apply vertex program. gather() reads only values of the previous
/// superstep; apply() is pure.
class VertexProgram {
 public:
  virtual ~VertexProgram() = default;
  virtual std::string_view name() const = 0;
  /// Sets initial values and loads whatever auxiliary arrays the program needs.
  virtual void init(VertexStateArrays& states, const Dataset& dataset) = 0;
  virtual double gather(VertexId v, const InEdges& in_edges, const VertexStateArrays& states) const = 0;
  virtual double apply(double accum, double old_value) const = 0;
};

using ProgramFactory = std::function<std::unique_ptr<VertexProgram>()>;

struct EngineConfig {
  std::uint16_t num_servers = 1;
  unsigned workers_per_server = 1;
  std::uint32_t max_supersteps = 100;
  CommConfig comm;
  CacheConfig cache{.capacity_bytes = 1ULL << 30, .mode = std::nullopt};
  bool skip_inactive_tiles = true;
  /// Above this updated fraction every tile is processed without probing
  /// the bloom filters.
  double full_scan_ratio = 0.5;

  void validate() const;
};

struct SuperstepReport {
  std::uint32_t superstep = 0;
  std::uint64_t updated_vertex_count = 0;
  std::uint64_t tiles_assigned = 0;
  std::uint64_t tiles_processed = 0;
  std::uint64_t tiles_skipped = 0;
  CacheStats cache;  // delta over this superstep
  std::uint64_t bytes_broadcast = 0;
  std::uint64_t frames_broadcast = 0;
  double wall_seconds = 0.0;
};

/// Sums per-server reports of the same superstep (the updated count is
/// global already and taken from the first).
SuperstepReport combine_reports(std::span<const SuperstepReport> per_server);

struct RunResult {
  std::vector<double> values;
  std::vector<SuperstepReport> reports;
  std::uint32_t supersteps() const noexcept { return static_cast<std::uint32_t>(reports.size()); }
};

/// Tile i goes to server i mod N.
std::vector<std::vector<TileId>> assign_tiles(const DatasetManifest& manifest, std::uint16_t num_servers);

/// Vertices updated in the previous superstep, in the form the skip check needs.
class UpdatedSet {
 public:
  /// Everything counts as updated (first superstep, or skipping disabled).
  static UpdatedSet everything();
  /// Builds from flags; above `full_scan_ratio` of |V| it collapses to everything().
  static UpdatedSet from_flags(const ConcurrentBitset& flags, double full_scan_ratio);
  /// Explicit id list (tests).
  static UpdatedSet of(std::vector<VertexId> ids);

  bool all() const noexcept { return all_; }
  const std::vector<VertexId>& ids() const noexcept { return ids_; }

 private:
  bool all_ = false;
  std::vector<VertexId> ids_;
};

/// True when some updated vertex may be a source of the tile. Never false
/// for a tile that does hold an updated source.
bool should_process(const TileDescriptor& tile, const UpdatedSet& updated);

/// Gather and apply for every target of the tile (including targets with no
/// in-edges); records targets whose value changes.
UpdateBatch process_tile(const Tile& tile, const VertexStateArrays& states, const VertexProgram& program);

/// One logical server: its tiles, its replica of the vertex state, its cache
/// and its side of the broadcast layer.
class Server {
 public:
  Server(const Dataset& dataset, EngineConfig config, Transport& transport, std::unique_ptr<VertexProgram> program);
  ~Server();

  void initialize();
  SuperstepReport run_superstep();
  /// Runs until no vertex changes or max_supersteps. `after_superstep` is
  /// called after every superstep's updates are applied.
  RunResult run(const std::function<void(const SuperstepReport&)>& after_superstep = {});
  /// Wakes peers when this server fails.
  void abort() noexcept;

  const VertexStateArrays& states() const noexcept { return states_; }
  const EdgeCache& cache() const noexcept { return cache_; }
  const std::vector<TileId>& assigned_tiles() const noexcept { return tiles_; }
  std::uint16_t rank() const noexcept { return transport_.rank(); }

 private:
  const Dataset& dataset_;
  EngineConfig config_;
  Transport& transport_;
  std::unique_ptr<VertexProgram> program_;
  std::vector<TileId> tiles_;
  VertexStateArrays states_;
  EdgeCache cache_;
  Communicator comm_;
  WorkerPool pool_;
  UpdatedSet active_;
  std::uint32_t superstep_ = 0;
  bool initialized_ = false;
};

/// Called once per superstep after every server has applied its updates,
/// with the combined report and every server's replica.
using SuperstepObserver =
    std::function<void(const SuperstepReport& combined, std::span<const VertexStateArrays* const> replicas)>;

/// N servers in one process over the in-process transport. Verifies that all
/// replicas agree at the end.
RunResult run_local_cluster(const Dataset& dataset, const EngineConfig& config, const ProgramFactory& make_program,
                            const SuperstepObserver& observer = {});

/// This process's server in a multi-process run.
RunResult run_server(const Dataset& dataset, const EngineConfig& config, Transport& transport,
                     const ProgramFactory& make_program);

}  // namespace tilegraph
