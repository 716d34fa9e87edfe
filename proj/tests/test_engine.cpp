#include <doctest.h>

#include <random>
#include <thread>

#include "tilegraph/algorithms.hpp"
#include "tilegraph/engine.hpp"
#include "tilegraph/errors.hpp"
#include "tilegraph/reference.hpp"
#include "test_support.hpp"

using namespace tilegraph;
using tilegraph::testing::TempDir;

namespace {

ProgramFactory pagerank() { return make_program_factory("pagerank", {}); }
ProgramFactory sssp(VertexId s) { return make_program_factory("sssp", {.source = s}); }

EngineConfig config(std::uint16_t n, unsigned t = 1) {
  EngineConfig c;
  c.num_servers = n;
  c.workers_per_server = t;
  c.comm.barrier_timeout = std::chrono::seconds(20);
  return c;
}

/// Fails on purpose for one vertex.
class ThrowingProgram final : public VertexProgram {
 public:
  std::string_view name() const override { return "throwing"; }
  void init(VertexStateArrays& s, const Dataset&) override { std::fill(s.value.begin(), s.value.end(), 1.0); }
  double gather(VertexId v, const InEdges&, const VertexStateArrays&) const override {
    if (v == 3) throw std::runtime_error("boom");
    return 0.0;
  }
  double apply(double a, double) const override { return a; }
};

/// Passes barrier frames but silently loses update frames.
class LossyTransport final : public Transport {
 public:
  explicit LossyTransport(std::unique_ptr<Transport> inner) : inner_(std::move(inner)) {}
  std::uint16_t rank() const override { return inner_->rank(); }
  std::uint16_t size() const override { return inner_->size(); }
  void send(std::uint16_t dest, std::span<const std::uint8_t> frame) override {
    if (peek_frame_header(frame).kind == FrameKind::barrier) inner_->send(dest, frame);
  }
  std::optional<Incoming> receive(std::chrono::milliseconds t) override { return inner_->receive(t); }
  void shutdown() override { inner_->shutdown(); }
  void abort() noexcept override { inner_->abort(); }

 private:
  std::unique_ptr<Transport> inner_;
};

struct Graph {
  TempDir dir;
  std::vector<EdgeRecord> edges;
  DatasetManifest manifest;
  std::optional<Dataset> ds;

  Graph(std::vector<EdgeRecord> e, std::uint64_t tile_size, bool weighted = false) : edges(std::move(e)) {
    manifest = testing::build_dataset(edges, weighted, tile_size, dir.path());
    ds.emplace(Dataset::open(dir.path()));
  }
};

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("tiles are dealt round robin") {
    DatasetManifest m;
    m.tiles.resize(7);
    auto a = assign_tiles(m, 3);
    CHECK(a[0] == std::vector<TileId>{0, 3, 6});
    CHECK(a[1] == std::vector<TileId>{1, 4});
    CHECK(a[2] == std::vector<TileId>{2, 5});
    CHECK_THROWS_AS(assign_tiles(m, 0), DomainError);
  }

  TEST_CASE("config validation") {
    auto c = config(1);
    c.workers_per_server = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = config(1);
    c.max_supersteps = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = config(0);
    CHECK_THROWS_AS(c.validate(), DomainError);
  }

  TEST_CASE("updated set and the skip check") {
    ConcurrentBitset flags(100);
    flags.set(3);
    flags.set(64);
    auto s = UpdatedSet::from_flags(flags, 0.5);
    CHECK(!s.all());
    CHECK(s.ids() == std::vector<VertexId>{3, 64});
    for (VertexId v = 0; v < 60; ++v) flags.set(v);
    CHECK(UpdatedSet::from_flags(flags, 0.5).all());
    CHECK(UpdatedSet::from_flags(ConcurrentBitset(10), 0.5).ids().empty());

    TileDescriptor d;
    d.num_edges = 2;
    d.sources = BloomFilter(2);
    d.sources.insert(5);
    d.sources.insert(9);
    CHECK(should_process(d, UpdatedSet::of({9})));
    CHECK(should_process(d, UpdatedSet::everything()));
    CHECK(!should_process(d, UpdatedSet::of({})));
    TileDescriptor empty;
    CHECK(!should_process(empty, UpdatedSet::of({1, 2, 3})));
  }

  TEST_CASE("process_tile reports only changed targets") {
    Tile t;
    t.first_target = 0;
    t.num_targets = 3;
    t.row = {0, 1, 1, 3};
    t.col = {2, 0, 1};
    VertexStateArrays s(3);
    SsspProgram p({.source = 0});
    p.init_values(s);
    auto b = process_tile(t, s, p);
    REQUIRE(b.updates.size() == 1);
    CHECK(b.updates[0].vertex == 2);
    CHECK(b.updates[0].value == 1.0);

    t.col = {2, 0, 7};
    CHECK_THROWS_AS(process_tile(t, s, p), ConsistencyError);
  }

  TEST_CASE("program failures name the tile and vertex") {
    Graph g({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}}, 2);
    try {
      run_local_cluster(*g.ds, config(2), [] { return std::make_unique<ThrowingProgram>(); });
      FAIL("expected ProgramError");
    } catch (const ProgramError& e) {
      CHECK(e.vertex() == 3);
      CHECK(e.tile() == tile_of_vertex(3, g.manifest.splitters));
    }
  }

  TEST_CASE("pagerank stops at the superstep cap") {
    Graph g({{0, 1}, {1, 2}, {2, 0}, {0, 2}}, 1);
    auto c = config(2);
    c.max_supersteps = 20;
    auto r = run_local_cluster(*g.ds, c, pagerank());
    CHECK(r.supersteps() == 20);
    CHECK(testing::max_abs_diff(r.values, testing::naive_pagerank(g.edges, 3, 20)) <= 1e-12);
  }

  TEST_CASE("sssp on a path of length L takes L+1 supersteps") {
    for (std::uint32_t len : {1u, 2u, 5u, 17u}) {
      std::vector<EdgeRecord> path;
      for (VertexId v = 0; v < len; ++v) path.push_back({v, v + 1});
      Graph g(path, 2);
      for (std::uint16_t n : {1, 3}) {
        auto r = run_local_cluster(*g.ds, config(n, 2), sssp(0));
        CHECK(r.supersteps() == len + 1);
        for (VertexId v = 0; v <= len; ++v) CHECK(r.values[v] == static_cast<double>(v));
      }
    }
  }

  TEST_CASE("observer sees identical replicas every superstep") {
    std::mt19937_64 rng(12);
    auto edges = testing::random_graph({.vertices = 150, .edges = 900, .weighted = true}, rng);
    Graph g(edges, 40, true);
    std::uint32_t calls = 0;
    std::vector<double> prev;
    auto observer = [&](const SuperstepReport& rep, std::span<const VertexStateArrays* const> replicas) {
      ++calls;
      CHECK(rep.superstep == calls);
      REQUIRE(replicas.size() == 3);
      for (auto* r : replicas) CHECK(r->value == replicas[0]->value);
      if (!prev.empty())
        for (std::size_t v = 0; v < prev.size(); ++v) CHECK(replicas[0]->value[v] <= prev[v]);
      prev = replicas[0]->value;
    };
    auto r = run_local_cluster(*g.ds, config(3, 2), sssp(0), observer);
    CHECK(calls == r.supersteps());
    CHECK(r.values == reference_sssp(edges, 150, true, 0).distance);
  }

  TEST_CASE("skipping leaves results unchanged and skips tiles") {
    std::vector<EdgeRecord> path;
    for (VertexId v = 0; v < 40; ++v) path.push_back({v, v + 1});
    Graph g(path, 4);
    auto on = run_local_cluster(*g.ds, config(2), sssp(0));
    auto c = config(2);
    c.skip_inactive_tiles = false;
    auto off = run_local_cluster(*g.ds, c, sssp(0));
    CHECK(on.values == off.values);
    std::uint64_t skipped = 0, processed_off = 0, processed_on = 0;
    for (auto& r : on.reports) skipped += r.tiles_skipped, processed_on += r.tiles_processed;
    for (auto& r : off.reports) {
      processed_off += r.tiles_processed;
      CHECK(r.tiles_skipped == 0);
    }
    CHECK(skipped > 0);
    CHECK(processed_on < processed_off);
    CHECK(processed_on + skipped == processed_off);
  }

  TEST_CASE("lost updates are caught by the barrier count") {
    std::vector<EdgeRecord> cycle;
    for (VertexId v = 0; v < 10; ++v) cycle.push_back({v, (v + 1) % 10});
    Graph g(cycle, 2);
    LocalHub hub(2);
    std::vector<std::unique_ptr<Transport>> t;
    for (std::uint16_t r = 0; r < 2; ++r) t.push_back(std::make_unique<LossyTransport>(hub.endpoint(r)));
    std::vector<std::exception_ptr> errors(2);
    {
      std::vector<std::jthread> threads;
      for (std::uint16_t r = 0; r < 2; ++r)
        threads.emplace_back([&, r] {
          try {
            run_server(*g.ds, config(2), *t[r], sssp(0));
          } catch (...) {
            errors[r] = std::current_exception();
          }
        });
    }
    int consistency = 0;
    for (auto& e : errors) {
      REQUIRE(e);
      try {
        std::rethrow_exception(e);
      } catch (const ConsistencyError&) {
        ++consistency;
      } catch (const TransportError&) {
      }
    }
    CHECK(consistency >= 1);
  }

  TEST_CASE("bad runs are rejected up front") {
    Graph g({{0, 1, -2.0}, {1, 0, 1.0}}, 1, true);
    CHECK_THROWS_AS(run_local_cluster(*g.ds, config(1), sssp(0)), DomainError);
    Graph h({{0, 1}}, 1);
    CHECK_THROWS_AS(run_local_cluster(*h.ds, config(1), sssp(2)), DomainError);
    LocalHub hub(2);
    auto e = hub.endpoint(0);
    CHECK_THROWS_AS(Server(*h.ds, config(3), *e, pagerank()()), DomainError);
  }

  TEST_CASE("empty graph") {
    TempDir dir;
    testing::build_dataset({}, false, 4, dir.path());
    auto ds = Dataset::open(dir.path());
    CHECK_THROWS_AS(run_local_cluster(ds, config(2), pagerank()), DomainError);
  }

  TEST_CASE("reports add up across servers") {
    std::mt19937_64 rng(21);
    auto edges = testing::random_graph({.vertices = 200, .edges = 1500}, rng);
    Graph g(edges, 50);
    auto c = config(4);
    c.max_supersteps = 3;
    c.cache.capacity_bytes = 0;
    auto r = run_local_cluster(*g.ds, c, pagerank());
    REQUIRE(r.supersteps() == 3);
    for (const auto& rep : r.reports) {
      CHECK(rep.tiles_assigned == g.manifest.tile_count());
      CHECK(rep.cache.misses == rep.tiles_processed);
      CHECK(rep.cache.hits == 0);
      CHECK(rep.frames_broadcast > 0);
    }
  }
}
