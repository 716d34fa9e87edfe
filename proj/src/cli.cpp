#include "tilegraph/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "tilegraph/algorithms.hpp"
#include "tilegraph/cost_model.hpp"
#include "tilegraph/dataset.hpp"
#include "tilegraph/engine.hpp"
#include "tilegraph/errors.hpp"
#include "tilegraph/ingest.hpp"
#include "tilegraph/reference.hpp"
#include "tilegraph/transport.hpp"

namespace tilegraph::cli {
namespace {

/// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct PartitionArgs {
  std::string input;
  std::string out;
  std::uint64_t tile_size = 16ULL << 20;
  std::uint64_t memory_mb = 256;
  unsigned threads = 0;
};

struct RunArgs {
  std::string dataset;
  std::string algo = "pagerank";
  std::uint16_t servers = 1;
  unsigned workers = 1;
  std::uint32_t max_supersteps = 20;
  std::optional<RawVertexId> source;
  double epsilon = 0.0;
  std::uint64_t cache_mb = 1024;
  std::string cache_mode = "auto";
  std::string comm = "hybrid";
  std::string compress = "fast";
  bool no_skip = false;
  std::string transport = "local";
  std::string listen;
  std::vector<std::string> peers;
  std::optional<std::uint16_t> rank;
  std::string out;
  std::string report;
  bool quiet = false;
  // verify only
  std::string input;
  std::optional<double> tolerance;
};

void add_engine_flags(CLI::App& cmd, RunArgs& a) {
  cmd.add_option("--dataset", a.dataset, "Dataset directory")->required();
  cmd.add_option("--algo", a.algo, "pagerank or sssp")->check(CLI::IsMember({"pagerank", "sssp"}));
  cmd.add_option("--servers", a.servers, "Number of servers N")->check(CLI::Range(1, 65535));
  cmd.add_option("--workers", a.workers, "Workers per server T")->check(CLI::Range(1, 1024));
  cmd.add_option("--max-supersteps", a.max_supersteps, "Superstep cap")->check(CLI::PositiveNumber);
  cmd.add_option("--source", a.source, "SSSP source (input id)");
  cmd.add_option("--epsilon", a.epsilon, "PageRank change threshold")->check(CLI::NonNegativeNumber);
  cmd.add_option("--cache-mb", a.cache_mb, "Edge cache capacity per server in MiB");
  cmd.add_option("--cache-mode", a.cache_mode, "auto or 1..4")->check(CLI::IsMember({"auto", "1", "2", "3", "4"}));
  cmd.add_option("--comm", a.comm, "dense, sparse or hybrid")->check(CLI::IsMember({"dense", "sparse", "hybrid"}));
  cmd.add_option("--compress", a.compress, "none, fast or high")->check(CLI::IsMember({"none", "fast", "high"}));
  cmd.add_flag("--no-skip", a.no_skip, "Process every tile every superstep");
  cmd.add_flag("--quiet", a.quiet, "No per-superstep lines on stderr");
}

EngineConfig engine_config(const RunArgs& a) {
  EngineConfig c;
  c.num_servers = a.servers;
  c.workers_per_server = a.workers;
  c.max_supersteps = a.max_supersteps;
  c.comm.policy.mode = parse_comm_mode(a.comm);
  c.comm.codec = parse_wire_codec(a.compress);
  c.cache.capacity_bytes = a.cache_mb << 20;
  if (a.cache_mode != "auto") c.cache.mode = parse_cache_mode(a.cache_mode);
  c.skip_inactive_tiles = !a.no_skip;
  return c;
}

VertexId dense_id(const std::vector<RawVertexId>& remap, RawVertexId raw) {
  auto it = std::lower_bound(remap.begin(), remap.end(), raw);
  if (it == remap.end() || *it != raw) throw DomainError("vertex " + std::to_string(raw) + " is not in the dataset");
  return static_cast<VertexId>(it - remap.begin());
}

ProgramFactory program_factory(const RunArgs& a, const std::vector<RawVertexId>& remap) {
  AlgorithmOptions opts;
  opts.pagerank.epsilon = a.epsilon;
  if (a.algo == "sssp") {
    if (!a.source) throw UsageError("--source is required for sssp");
    opts.source = dense_id(remap, *a.source);
  }
  return make_program_factory(a.algo, opts);
}

std::string report_line(const SuperstepReport& r) {
  std::ostringstream s;
  s << "superstep " << r.superstep << " updated " << r.updated_vertex_count << " tiles " << r.tiles_processed << "/"
    << r.tiles_assigned << " skipped " << r.tiles_skipped << " cache_hits " << r.cache.hits << " cache_misses "
    << r.cache.misses << " disk_bytes " << r.cache.disk_bytes_read << " sent_bytes " << r.bytes_broadcast
    << " wall_s " << r.wall_seconds;
  return s.str();
}

nlohmann::json report_json(const SuperstepReport& r) {
  return {{"superstep", r.superstep},
          {"updated_vertex_count", r.updated_vertex_count},
          {"tiles_assigned", r.tiles_assigned},
          {"tiles_processed", r.tiles_processed},
          {"tiles_skipped", r.tiles_skipped},
          {"cache_hits", r.cache.hits},
          {"cache_misses", r.cache.misses},
          {"cache_evictions", r.cache.evictions},
          {"cache_bytes_resident", r.cache.bytes_resident},
          {"disk_reads", r.cache.disk_reads},
          {"disk_bytes_read", r.cache.disk_bytes_read},
          {"bytes_broadcast", r.bytes_broadcast},
          {"frames_broadcast", r.frames_broadcast},
          {"wall_seconds", r.wall_seconds}};
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  return f;
}

RunResult execute(const Dataset& ds, const RunArgs& a, const ProgramFactory& factory, std::ostream& err) {
  EngineConfig cfg = engine_config(a);
  std::optional<std::ofstream> report;
  if (!a.report.empty()) report.emplace(open_output(a.report));
  auto emit = [&](const SuperstepReport& r) {
    if (!a.quiet) err << report_line(r) << '\n';
    if (report) *report << report_json(r).dump() << '\n';
  };

  if (a.transport == "local") {
    if (!a.listen.empty() || !a.peers.empty() || a.rank) throw UsageError("--listen/--peers/--rank need --transport tcp");
    auto observer = [&](const SuperstepReport& r, std::span<const VertexStateArrays* const>) { emit(r); };
    return run_local_cluster(ds, cfg, factory, observer);
  }

  if (a.listen.empty() || !a.rank) throw UsageError("--transport tcp needs --listen and --rank");
  std::vector<PeerAddress> addresses;
  for (const auto& p : a.peers) addresses.push_back(PeerAddress::parse(p));
  if (*a.rank > addresses.size()) throw UsageError("--rank exceeds the number of peers");
  addresses.insert(addresses.begin() + *a.rank, PeerAddress::parse(a.listen));
  if (addresses.size() != a.servers) {
    if (a.servers != 1) throw UsageError("--peers count + 1 must equal --servers");
    cfg.num_servers = static_cast<std::uint16_t>(addresses.size());
  }
  auto transport = TcpTransport::connect(*a.rank, addresses);
  Server server(ds, cfg, *transport, factory());
  try {
    return server.run(emit);
  } catch (...) {
    server.abort();
    throw;
  }
}

int cmd_partition(const PartitionArgs& a, std::ostream& out) {
  IngestOptions opts;
  if (a.tile_size == 0) throw UsageError("--tile-size must be >= 1");
  opts.avg_tile_size = a.tile_size;
  opts.partition.memory_budget_bytes = a.memory_mb << 20;
  opts.partition.threads = a.threads;
  auto m = ingest_edge_list_file(a.input, a.out, opts);
  out << "vertices " << m.vertex_count << "\nedges " << m.edge_count << "\ntiles " << m.tile_count() << '\n';
  return kOk;
}

int cmd_run(const RunArgs& a, std::ostream& err) {
  auto ds = Dataset::open(a.dataset);
  auto remap = ds.load_id_remap();
  auto factory = program_factory(a, remap);
  std::optional<std::ofstream> out;
  if (!a.out.empty()) out.emplace(open_output(a.out));
  auto result = execute(ds, a, factory, err);
  if (out) {
    for (std::size_t v = 0; v < result.values.size(); ++v)
      *out << remap[v] << ' ' << format_double(result.values[v]) << '\n';
    if (!*out) throw IoError("write to " + a.out + " failed");
  }
  return kOk;
}

/// Edge list in dense ids, either re-read from the text input or rebuilt from
/// the tiles.
std::vector<EdgeRecord> oracle_edges(const Dataset& ds, const std::string& input,
                                     const std::vector<RawVertexId>& remap) {
  std::vector<EdgeRecord> edges;
  if (input.empty()) {
    for (TileId t = 0; t < ds.manifest().tile_count(); ++t) {
      Tile tile = ds.load_tile(t);
      for (std::uint32_t i = 0; i < tile.num_targets; ++i) {
        auto src = tile.sources_of(i);
        auto w = tile.weights_of(i);
        for (std::size_t j = 0; j < src.size(); ++j)
          edges.push_back({src[j], tile.first_target + i, w.empty() ? 1.0 : w[j]});
      }
    }
    return edges;
  }
  std::ifstream in(input);
  if (!in) throw IoError("cannot open " + input);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    auto e = parse_edge_line(line, n);
    if (!e) continue;
    edges.push_back({dense_id(remap, e->src), dense_id(remap, e->dst), e->weight.value_or(1.0)});
  }
  return edges;
}

int cmd_verify(const RunArgs& a, std::ostream& out, std::ostream& err) {
  auto ds = Dataset::open(a.dataset);
  auto remap = ds.load_id_remap();
  auto factory = program_factory(a, remap);
  auto result = execute(ds, a, factory, err);
  auto edges = oracle_edges(ds, a.input, remap);
  const auto& m = ds.manifest();

  std::vector<double> expected;
  if (a.algo == "pagerank") {
    PageRankParams p;
    p.epsilon = a.epsilon;
    expected = reference_pagerank(edges, m.vertex_count, a.max_supersteps, p);
  } else {
    expected = reference_sssp(edges, m.vertex_count, m.weighted, dense_id(remap, *a.source)).distance;
  }
  double worst = 0.0;
  for (std::size_t v = 0; v < expected.size(); ++v) {
    double x = result.values.at(v), y = expected[v];
    double d = (x == y) ? 0.0 : std::abs(x - y);
    if (std::isnan(d) || (x == kInfinity) != (y == kInfinity)) d = std::numeric_limits<double>::infinity();
    worst = std::max(worst, d);
  }
  const double tol = a.tolerance.value_or(a.algo == "pagerank" ? 1e-12 : 0.0);
  out << "algo " << a.algo << "\nsupersteps " << result.supersteps() << "\nmax_deviation " << format_double(worst)
      << "\nstatus " << (worst <= tol ? "ok" : "mismatch") << '\n';
  return worst <= tol ? kOk : kRuntime;
}

int cmd_info(const std::string& dir, bool list_tiles, std::ostream& out) {
  auto ds = Dataset::open(dir);
  const auto& m = ds.manifest();
  out << "format_version " << m.format_version << "\nvertices " << m.vertex_count << "\nedges " << m.edge_count
      << "\nweighted " << (m.weighted ? "yes" : "no") << "\nmin_weight " << format_double(m.min_weight)
      << "\navg_tile_size " << m.avg_tile_size << "\navg_degree " << format_double(m.avg_degree) << "\ntiles "
      << m.tile_count() << "\ntile_bytes " << m.total_tile_bytes() << "\nid_remap "
      << (m.id_remap_file.empty() ? "identity" : m.id_remap_file) << '\n';
  if (list_tiles)
    for (const auto& t : m.tiles)
      out << "tile " << t.tile_id << " targets [" << t.first_target << ", " << (t.first_target + t.num_targets)
          << ") edges " << t.num_edges << " bytes " << t.byte_length << '\n';
  return kOk;
}

struct CostArgs {
  std::string system = "tilegraph";
  cost::WorkloadParams p;
  std::optional<double> tiles;
};

int cmd_cost(CostArgs a, std::ostream& out) {
  a.p.tiles = a.tiles.value_or(a.p.servers);
  const auto& p = a.p;
  p.validate();
  const double d = p.degree();
  const auto od = cost::expected_od_vertices(p.vertices, d, p.servers);
  out << "# model estimates, not measurements\n";
  out << "avg_degree " << format_double(d) << '\n';
  out << "combining_ratio " << format_double(cost::combining_ratio(d, p.workers, p.servers)) << '\n';
  out << "memory_aa_bytes " << format_double(cost::memory_aa(p)) << '\n';
  out << "expected_od_vertices " << format_double(od.bound) << '\n';
  out << "expected_od_vertices_capped " << format_double(od.capped) << '\n';
  out << "memory_od_bytes " << format_double(cost::memory_od(p, od.bound)) << '\n';

  std::vector<std::string_view> systems;
  if (a.system == "all")
    systems.assign(std::begin(cost::kSystems), std::end(cost::kSystems));
  else
    systems.push_back(a.system);
  for (auto s : systems) {
    auto r = cost::resource_row(s, p);
    out << "\nsystem " << r.system << " (asymptotic, unit constants)\n";
    auto cell = [&](const char* name, const cost::ResourceCell& c) {
      out << "  " << name << " " << c.expression << " = " << format_double(c.value) << '\n';
    };
    cell("ram_vertex", r.ram_vertex);
    cell("ram_edge  ", r.ram_edge);
    cell("ram_msg   ", r.ram_msg);
    cell("network   ", r.network);
    cell("disk_read ", r.disk_read);
    cell("disk_write", r.disk_write);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Out-of-core distributed graph processing: partition, run, verify, info, cost"};
  app.name("tilegraph");
  app.require_subcommand(1);

  PartitionArgs pa;
  auto* partition = app.add_subcommand("partition", "Convert a text edge list into a tiled dataset");
  partition->add_option("--input", pa.input, "Edge list: src dst [weight] per line")->required();
  partition->add_option("--out", pa.out, "Output dataset directory")->required();
  partition->add_option("--tile-size", pa.tile_size, "Target edges per tile");
  partition->add_option("--memory-mb", pa.memory_mb, "In-memory edge budget before spilling")->check(CLI::PositiveNumber);
  partition->add_option("--threads", pa.threads, "Worker threads (0 = all cores)");

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run an algorithm on a dataset");
  add_engine_flags(*run_cmd, ra);
  run_cmd->add_option("--transport", ra.transport, "local or tcp")->check(CLI::IsMember({"local", "tcp"}));
  run_cmd->add_option("--listen", ra.listen, "host:port of this rank (tcp)");
  run_cmd->add_option("--peers", ra.peers, "host:port of the other ranks in rank order (tcp)")->delimiter(',');
  run_cmd->add_option("--rank", ra.rank, "This process's rank (tcp)");
  run_cmd->add_option("--out", ra.out, "Write 'vertex_id value' lines here");
  run_cmd->add_option("--report", ra.report, "Write one JSON record per superstep here");

  RunArgs va;
  auto* verify = app.add_subcommand("verify", "Run an algorithm and compare against the single-threaded reference");
  add_engine_flags(*verify, va);
  verify->add_option("--input", va.input, "Original edge list (default: rebuild edges from the tiles)");
  verify->add_option("--tolerance", va.tolerance, "Allowed max deviation (default 1e-12 pagerank, 0 sssp)");

  std::string info_dir;
  bool info_tiles = false;
  auto* info = app.add_subcommand("info", "Print a dataset's manifest");
  info->add_option("dir", info_dir, "Dataset directory")->required();
  info->add_flag("--tiles", info_tiles, "Also list every tile");

  CostArgs ca;
  auto* cost_cmd = app.add_subcommand("cost", "Evaluate the memory and resource model");
  cost_cmd->add_option("--system", ca.system, "pregel+, powergraph, graphd, chaos, tilegraph or all");
  cost_cmd->add_option("--vertices", ca.p.vertices, "|V|")->required();
  cost_cmd->add_option("--edges", ca.p.edges, "|E|")->required();
  cost_cmd->add_option("--servers", ca.p.servers, "N");
  cost_cmd->add_option("--workers", ca.p.workers, "T");
  cost_cmd->add_option("--tiles", ca.tiles, "P (default N)");
  cost_cmd->add_option("--beta", ca.p.beta, "Cache miss ratio");
  cost_cmd->add_option("--eta", ca.p.eta, "Combining ratio (default from the model)");
  cost_cmd->add_option("--replication", ca.p.replication, "Vertex replicas M");
  cost_cmd->add_option("--bytes-per-vertex", ca.p.bytes_vertex_msg, "All-in-all bytes per vertex");
  cost_cmd->add_option("--bytes-per-vertex-od", ca.p.bytes_id_vertex_msg, "On-demand bytes per vertex");
  cost_cmd->add_option("--bytes-per-tile", ca.p.bytes_tile, "Bytes per in-memory tile");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*partition) return cmd_partition(pa, out);
    if (*run_cmd) return cmd_run(ra, err);
    if (*verify) return cmd_verify(va, out, err);
    if (*info) return cmd_info(info_dir, info_tiles, out);
    if (*cost_cmd) return cmd_cost(ca, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tilegraph::cli
