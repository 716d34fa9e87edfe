#include "tilegraph/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "tilegraph/errors.hpp"

namespace tilegraph {
namespace fs = std::filesystem;

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t'; }

RawVertexId parse_id(std::string_view tok, std::size_t line_number) {
  if (!tok.empty() && tok.front() == '-') throw ParseError("negative vertex id '" + std::string(tok) + "'", line_number);
  RawVertexId v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc::result_out_of_range)
    throw CapacityError("line " + std::to_string(line_number) + ": vertex id overflow '" + std::string(tok) + "'");
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError("invalid vertex id '" + std::string(tok) + "'", line_number);
  return v;
}

double parse_weight(std::string_view tok, std::size_t line_number) {
  double w = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), w);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(w))
    throw ParseError("invalid edge weight '" + std::string(tok) + "'", line_number);
  return w;
}

/// Removes everything a partition run created unless commit() is reached.
class OutputGuard {
 public:
  explicit OutputGuard(fs::path root) : root_(std::move(root)) {}
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    std::error_code ec;
    for (auto it = created_.rbegin(); it != created_.rend(); ++it) fs::remove_all(*it, ec);
  }

  /// Creates `dir` when missing and remembers it for cleanup.
  void ensure_dir(const fs::path& dir) {
    if (fs::exists(dir)) return;
    fs::create_directories(dir);
    track(dir);
  }
  void track(const fs::path& p) {
    std::lock_guard lock(mu_);
    if (!committed_) created_.push_back(p);
  }
  void write(const fs::path& p, std::span<const std::uint8_t> bytes) {
    track(p);
    write_file(p, bytes);
  }
  void commit() {
    std::lock_guard lock(mu_);
    committed_ = true;
    created_.clear();
  }

 private:
  fs::path root_;
  std::mutex mu_;
  std::vector<fs::path> created_;
  bool committed_ = false;
};

/// Removes a scratch directory on scope exit regardless of outcome.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(fs::path p) : path(std::move(p)) {
    std::error_code ec;
    fs::remove_all(path, ec);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

struct Bucket {
  TileId first_tile = 0;
  TileId end_tile = 0;
  std::uint64_t edges = 0;
};

/// Counting sort by target, then a stable sort by source within each target.
Tile build_tile(TileId t, VertexId first, std::uint32_t num_targets, bool weighted,
                std::span<const EdgeRecord> edges) {
  Tile tile;
  tile.tile_id = t;
  tile.first_target = first;
  tile.num_targets = num_targets;
  tile.weighted = weighted;
  tile.row.assign(std::size_t{num_targets} + 1, 0);
  for (const auto& e : edges) ++tile.row[e.dst - first + 1];
  std::partial_sum(tile.row.begin(), tile.row.end(), tile.row.begin());

  std::vector<std::pair<VertexId, double>> slots(edges.size());
  std::vector<std::uint32_t> cursor(tile.row.begin(), tile.row.end() - 1);
  for (const auto& e : edges) slots[cursor[e.dst - first]++] = {e.src, e.weight};
  for (std::uint32_t i = 0; i < num_targets; ++i)
    std::stable_sort(slots.begin() + tile.row[i], slots.begin() + tile.row[i + 1],
                     [](const auto& a, const auto& b) { return a.first < b.first; });

  tile.col.reserve(slots.size());
  for (const auto& s : slots) tile.col.push_back(s.first);
  if (weighted) {
    tile.val.reserve(slots.size());
    for (const auto& s : slots) tile.val.push_back(s.second);
  }
  return tile;
}

BloomFilter source_filter(const Tile& tile) {
  std::vector<VertexId> distinct(tile.col);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  BloomFilter f(distinct.size());
  for (auto v : distinct) f.insert(v);
  return f;
}

class SpillReader {
 public:
  explicit SpillReader(const fs::path& p) : in_(p, std::ios::binary) {
    if (!in_) throw IoError("cannot open spill file " + p.string());
  }
  template <typename Record, typename Fn>
  void for_each(Fn&& fn) {
    std::vector<Record> buf(1 << 16);
    while (in_) {
      in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(Record)));
      auto got = static_cast<std::size_t>(in_.gcount());
      if (got % sizeof(Record) != 0) throw IoError("truncated spill file");
      for (std::size_t i = 0; i < got / sizeof(Record); ++i) fn(buf[i]);
    }
  }

 private:
  std::ifstream in_;
};

struct RawSpillRecord {
  RawVertexId src;
  RawVertexId dst;
  double weight;
};

/// Dense view of a raw spill file through a sorted raw-id table.
class RemappedSpillStream final : public EdgeStream {
 public:
  RemappedSpillStream(fs::path file, const std::vector<RawVertexId>& sorted_ids, bool identity, bool weighted)
      : file_(std::move(file)), ids_(sorted_ids), identity_(identity), weighted_(weighted) {}

  bool weighted() const override { return weighted_; }
  void for_each(const std::function<void(const EdgeRecord&)>& sink) const override {
    SpillReader reader(file_);
    reader.for_each<RawSpillRecord>([&](const RawSpillRecord& r) {
      sink(EdgeRecord{dense(r.src), dense(r.dst), r.weight});
    });
  }

 private:
  VertexId dense(RawVertexId raw) const {
    if (identity_) return static_cast<VertexId>(raw);
    return static_cast<VertexId>(std::lower_bound(ids_.begin(), ids_.end(), raw) - ids_.begin());
  }
  fs::path file_;
  const std::vector<RawVertexId>& ids_;
  bool identity_;
  bool weighted_;
};

}  // namespace

std::optional<RawEdge> parse_edge_line(std::string_view line, std::size_t line_number) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string_view fields[3];
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_blank(line[i])) ++i;
    if (i >= line.size()) break;
    if (n == 0 && line[i] == '#') return std::nullopt;
    std::size_t start = i;
    while (i < line.size() && !is_blank(line[i])) ++i;
    if (n == 3) throw ParseError("too many fields (expected 'src dst [weight]')", line_number);
    fields[n++] = line.substr(start, i - start);
  }
  if (n == 0) return std::nullopt;
  if (n == 1) throw ParseError("missing destination vertex", line_number);
  RawEdge e;
  e.src = parse_id(fields[0], line_number);
  e.dst = parse_id(fields[1], line_number);
  if (n == 3) e.weight = parse_weight(fields[2], line_number);
  return e;
}

std::uint64_t DegreeArrays::edge_count() const noexcept {
  return std::accumulate(in_degree.begin(), in_degree.end(), std::uint64_t{0});
}

DegreeArrays compute_degrees(const EdgeStream& edges) {
  DegreeArrays d;
  auto bump = [](std::vector<std::uint32_t>& v, VertexId id) {
    if (id >= v.size()) v.resize(std::size_t{id} + 1, 0);
    if (v[id] == std::numeric_limits<std::uint32_t>::max())
      throw CapacityError("degree of vertex " + std::to_string(id) + " exceeds 32 bits");
    ++v[id];
  };
  edges.for_each([&](const EdgeRecord& e) {
    bump(d.out_degree, e.src);
    bump(d.in_degree, e.dst);
  });
  auto n = std::max(d.in_degree.size(), d.out_degree.size());
  d.in_degree.resize(n, 0);
  d.out_degree.resize(n, 0);
  return d;
}

SplitterTable build_splitters(std::span<const std::uint32_t> in_degree, std::uint64_t avg_tile_size) {
  if (avg_tile_size == 0) throw DomainError("average tile size must be >= 1");
  if (in_degree.size() > kMaxVertexCount) throw CapacityError("vertex count exceeds 32-bit ids");
  SplitterTable table;
  auto n = static_cast<VertexId>(in_degree.size());
  std::uint64_t size = 0;
  for (VertexId v = 0; v < n; ++v) {
    size += in_degree[v];
    if (size >= avg_tile_size) {
      table.boundaries.push_back(v + 1);
      size = 0;
    }
  }
  if (table.boundaries.back() != n) {
    if (table.boundaries.size() > 1 && size == 0)
      table.boundaries.back() = n;
    else
      table.boundaries.push_back(n);
  }
  return table;
}

DatasetManifest partition_into_tiles(const EdgeStream& edges, const SplitterTable& splitters,
                                     const DegreeArrays& degrees, std::uint64_t avg_tile_size,
                                     const fs::path& out_dir, const PartitionOptions& options) {
  const auto& b = splitters.boundaries;
  const std::uint64_t vertex_count = degrees.vertex_count();
  if (degrees.out_degree.size() != vertex_count) throw ConsistencyError("degree arrays differ in length");
  if (b.empty() || b.front() != 0 || b.back() != vertex_count)
    throw ConsistencyError("splitter table does not span the degree arrays");
  for (std::size_t i = 1; i < b.size(); ++i)
    if (b[i] <= b[i - 1]) throw ConsistencyError("splitter boundaries not strictly increasing");
  if (options.id_remap && options.id_remap->size() != vertex_count)
    throw ConsistencyError("id remap length != |V|");

  const auto tile_count = static_cast<TileId>(splitters.tile_count());
  std::vector<std::uint64_t> tile_edges(tile_count, 0);
  for (TileId t = 0; t < tile_count; ++t) {
    for (VertexId v = b[t]; v < b[t + 1]; ++v) tile_edges[t] += degrees.in_degree[v];
    if (tile_edges[t] > std::numeric_limits<std::uint32_t>::max())
      throw CapacityError("tile " + std::to_string(t) + " holds more than 2^32-1 edges");
  }

  // Consecutive tiles grouped so that each bucket's edges fit the memory budget.
  std::vector<Bucket> buckets;
  std::vector<std::uint32_t> bucket_of_tile(tile_count);
  const std::uint64_t budget_edges = std::max<std::uint64_t>(1, options.memory_budget_bytes / sizeof(EdgeRecord));
  for (TileId t = 0; t < tile_count; ++t) {
    if (buckets.empty() || (buckets.back().edges > 0 && buckets.back().edges + tile_edges[t] > budget_edges))
      buckets.push_back(Bucket{t, t, 0});
    buckets.back().end_tile = t + 1;
    buckets.back().edges += tile_edges[t];
    bucket_of_tile[t] = static_cast<std::uint32_t>(buckets.size() - 1);
  }
  const bool spill = buckets.size() > 1;

  OutputGuard guard(out_dir);
  guard.ensure_dir(out_dir);
  guard.ensure_dir(out_dir / dataset_files::kTileDir);
  std::optional<ScratchDir> scratch;
  if (spill) scratch.emplace(out_dir / ".partition-tmp");
  auto bucket_file = [&](std::size_t i) { return scratch->path / ("bucket_" + std::to_string(i) + ".bin"); };

  // Distribution pass: route every edge to its tile's bucket and re-count
  // degrees so a stream that disagrees with `degrees` is caught.
  const bool weighted = edges.weighted();
  std::vector<std::uint32_t> seen_in(vertex_count, 0);
  std::vector<std::uint32_t> seen_out(vertex_count, 0);
  double min_weight = std::numeric_limits<double>::infinity();
  std::vector<EdgeRecord> in_memory;
  std::vector<std::ofstream> writers;
  if (spill) {
    for (std::size_t i = 0; i < buckets.size(); ++i) {
      writers.emplace_back(bucket_file(i), std::ios::binary);
      if (!writers.back()) throw IoError("cannot create " + bucket_file(i).string());
    }
  } else {
    in_memory.reserve(buckets.empty() ? 0 : buckets.front().edges);
  }
  edges.for_each([&](const EdgeRecord& e) {
    if (e.src >= vertex_count || e.dst >= vertex_count)
      throw ConsistencyError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) + ") references id >= |V|");
    if (weighted && !std::isfinite(e.weight)) throw ConsistencyError("non-finite edge weight");
    ++seen_in[e.dst];
    ++seen_out[e.src];
    if (weighted) min_weight = std::min(min_weight, e.weight);
    EdgeRecord r{e.src, e.dst, weighted ? e.weight : 1.0};
    if (spill) {
      auto& w = writers[bucket_of_tile[tile_of_vertex(e.dst, splitters)]];
      w.write(reinterpret_cast<const char*>(&r), sizeof r);
    } else {
      in_memory.push_back(r);
    }
  });
  for (auto& w : writers) {
    w.close();
    if (!w) throw IoError("failed writing bucket spill file");
  }
  if (seen_in != degrees.in_degree || seen_out != degrees.out_degree)
    throw ConsistencyError("edge stream disagrees with the supplied degree arrays");

  // Per-bucket CSR build, in parallel across buckets.
  std::vector<TileDescriptor> descriptors(tile_count);
  parallel_for(buckets.size(), options.threads, [&](std::size_t bi) {
    const Bucket& bucket = buckets[bi];
    std::vector<EdgeRecord> loaded;
    std::span<const EdgeRecord> bucket_edges = in_memory;
    if (spill) {
      loaded.reserve(bucket.edges);
      SpillReader(bucket_file(bi)).for_each<EdgeRecord>([&](const EdgeRecord& e) { loaded.push_back(e); });
      bucket_edges = loaded;
    }
    // Stable partition of the bucket by tile keeps stream order inside each tile.
    std::vector<std::vector<EdgeRecord>> per_tile(bucket.end_tile - bucket.first_tile);
    for (TileId t = bucket.first_tile; t < bucket.end_tile; ++t) per_tile[t - bucket.first_tile].reserve(tile_edges[t]);
    for (const auto& e : bucket_edges) per_tile[tile_of_vertex(e.dst, splitters) - bucket.first_tile].push_back(e);
    loaded.clear();
    loaded.shrink_to_fit();

    for (TileId t = bucket.first_tile; t < bucket.end_tile; ++t) {
      auto& tile_edges_vec = per_tile[t - bucket.first_tile];
      Tile tile = build_tile(t, b[t], b[t + 1] - b[t], weighted, tile_edges_vec);
      tile_edges_vec = {};
      auto bytes = encode_tile(tile);
      guard.write(dataset_files::tile_path(out_dir, t), bytes);
      descriptors[t] = TileDescriptor{t, tile.first_target, tile.num_targets, tile.num_edges(), bytes.size(),
                                      source_filter(tile)};
    }
  });

  DatasetManifest m;
  m.vertex_count = vertex_count;
  m.edge_count = degrees.edge_count();
  m.weighted = weighted;
  m.min_weight = (weighted && m.edge_count > 0) ? min_weight : 1.0;
  m.avg_tile_size = avg_tile_size;
  m.avg_degree = vertex_count == 0 ? 0.0 : static_cast<double>(m.edge_count) / static_cast<double>(vertex_count);
  m.splitters = splitters;
  m.tiles = std::move(descriptors);
  if (options.id_remap) m.id_remap_file = dataset_files::kIdRemap;
  validate_manifest(m);

  guard.write(out_dir / dataset_files::kInDegree, encode_u32_array(degrees.in_degree));
  guard.write(out_dir / dataset_files::kOutDegree, encode_u32_array(degrees.out_degree));
  if (options.id_remap) guard.write(out_dir / dataset_files::kIdRemap, encode_u64_array(*options.id_remap));
  guard.write(out_dir / dataset_files::kManifest, encode_manifest(m));
  guard.commit();
  return m;
}

DatasetManifest ingest_edge_list(std::istream& text, const fs::path& out_dir, const IngestOptions& options) {
  if (options.avg_tile_size == 0) throw DomainError("average tile size must be >= 1");
  bool created_root = !fs::exists(out_dir);
  fs::create_directories(out_dir);
  try {
    ScratchDir scratch(out_dir / ".ingest-tmp");
    const fs::path raw_file = scratch.path / "raw_edges.bin";

    // Pass 1: parse, spill raw edges, collect the distinct raw ids.
    std::vector<RawVertexId> ids;
    const std::size_t compact_at = std::max<std::size_t>(1 << 20, options.partition.memory_budget_bytes / 16);
    std::optional<bool> weighted;
    {
      std::ofstream spill(raw_file, std::ios::binary);
      if (!spill) throw IoError("cannot create " + raw_file.string());
      std::string line;
      std::size_t line_number = 0;
      while (std::getline(text, line)) {
        ++line_number;
        auto e = parse_edge_line(line, line_number);
        if (!e) continue;
        bool has_weight = e->weight.has_value();
        if (!weighted) weighted = has_weight;
        if (*weighted != has_weight)
          throw ParseError(has_weight ? "weight column appears after unweighted lines" : "missing edge weight",
                           line_number);
        RawSpillRecord r{e->src, e->dst, e->weight.value_or(1.0)};
        spill.write(reinterpret_cast<const char*>(&r), sizeof r);
        ids.push_back(e->src);
        ids.push_back(e->dst);
        if (ids.size() >= compact_at) {
          std::sort(ids.begin(), ids.end());
          ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        }
      }
      if (text.bad()) throw IoError("error reading edge list");
      spill.close();
      if (!spill) throw IoError("failed writing " + raw_file.string());
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() > kMaxVertexCount) throw CapacityError("more distinct vertices than 32-bit ids allow");
    bool identity = ids.empty() || ids.back() == ids.size() - 1;

    RemappedSpillStream stream(raw_file, ids, identity, weighted.value_or(false));
    auto degrees = compute_degrees(stream);
    auto splitters = build_splitters(degrees.in_degree, options.avg_tile_size);
    PartitionOptions popts = options.partition;
    popts.id_remap = identity ? nullptr : &ids;
    return partition_into_tiles(stream, splitters, degrees, options.avg_tile_size, out_dir, popts);
  } catch (...) {
    std::error_code ec;
    if (created_root) fs::remove_all(out_dir, ec);
    throw;
  }
}

DatasetManifest ingest_edge_list_file(const fs::path& input, const fs::path& out_dir, const IngestOptions& options) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw IoError("cannot open " + input.string());
  return ingest_edge_list(in, out_dir, options);
}

}  // namespace tilegraph
