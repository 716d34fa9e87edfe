#include <doctest.h>

#include <numeric>
#include <random>
#include <thread>

#include "tilegraph/edge_cache.hpp"
#include "tilegraph/errors.hpp"
#include "test_support.hpp"

using namespace tilegraph;
using tilegraph::testing::TempDir;

namespace {

struct Fixture {
  TempDir dir;
  DatasetManifest manifest;
  std::optional<Dataset> ds;
  std::vector<TileId> all;

  explicit Fixture(std::uint64_t seed = 9, bool weighted = false) {
    std::mt19937_64 rng(seed);
    auto edges = testing::random_graph(
        {.vertices = 400, .edges = 6000, .shape = testing::DegreeShape::power_law, .weighted = weighted}, rng);
    manifest = testing::build_dataset(edges, weighted, 500, dir.path());
    ds.emplace(Dataset::open(dir.path()));
    all.resize(manifest.tile_count());
    std::iota(all.begin(), all.end(), 0u);
  }
};

}  // namespace

TEST_SUITE("edge-cache") {
  TEST_CASE("select_mode examples") {
    CHECK(select_mode(150, 100) == CacheMode::fast);
    CHECK(select_mode(10, 100) == CacheMode::raw);
    CHECK(select_mode(1000, 100) == CacheMode::balanced);
    CHECK(select_mode(400, 100) == CacheMode::balanced);
    CHECK(select_mode(500, 100) == CacheMode::high);
    CHECK(select_mode(501, 100) == CacheMode::balanced);
    CHECK(select_mode(0, 0) == CacheMode::raw);
    CHECK(select_mode(1, 0) == CacheMode::balanced);
    CHECK(select_mode(~0ULL, ~0ULL) == CacheMode::raw);
    CHECK(select_mode(~0ULL, ~0ULL / 3) == CacheMode::balanced);
  }

  TEST_CASE("mode table") {
    CHECK(planned_ratio(CacheMode::raw) == 1.0);
    CHECK(planned_ratio(CacheMode::fast) == 2.0);
    CHECK(planned_ratio(CacheMode::balanced) == 4.0);
    CHECK(planned_ratio(CacheMode::high) == 5.0);
    CHECK(parse_cache_mode("3") == CacheMode::balanced);
    CHECK_THROWS_AS(parse_cache_mode("0"), DomainError);
    CHECK_THROWS_AS(parse_cache_mode("auto"), DomainError);
  }

  TEST_CASE("tiles come back equal to the disk copy in every mode") {
    Fixture f(9, true);
    for (int m = 1; m <= 4; ++m) {
      EdgeCache cache(*f.ds, {.capacity_bytes = 1ULL << 30, .mode = static_cast<CacheMode>(m)}, f.all);
      CHECK(cache.stats().hits == 0);
      CHECK(cache.stats().misses == 0);
      for (int round = 0; round < 2; ++round)
        for (auto t : f.all) REQUIRE(cache.get_tile(t) == f.ds->load_tile(t));
      auto s = cache.stats();
      CHECK(s.misses == f.all.size());
      CHECK(s.hits == f.all.size());
      CHECK(s.evictions == 0);
      CHECK(s.bytes_resident <= cache.capacity());
      if (m == 1) CHECK(s.measured_ratio() == 1.0);
      if (m > 1) CHECK(s.measured_ratio() > 1.0);
    }
  }

  TEST_CASE("capacity 0 misses every time") {
    Fixture f;
    EdgeCache cache(*f.ds, {.capacity_bytes = 0, .mode = std::nullopt}, f.all);
    for (int round = 0; round < 3; ++round)
      for (auto t : f.all) cache.get_tile(t);
    auto s = cache.stats();
    CHECK(s.hits == 0);
    CHECK(s.misses == 3 * f.all.size());
    CHECK(s.bytes_resident == 0);
    CHECK(s.miss_ratio() == 1.0);
    CHECK(s.disk_bytes_read == 3 * f.manifest.total_tile_bytes());
  }

  TEST_CASE("auto mode sizes against the planned tiles") {
    Fixture f;
    auto total = f.manifest.total_tile_bytes();
    CHECK(EdgeCache(*f.ds, {.capacity_bytes = total, .mode = std::nullopt}, f.all).mode() == CacheMode::raw);
    CHECK(EdgeCache(*f.ds, {.capacity_bytes = total / 2, .mode = std::nullopt}, f.all).mode() == CacheMode::fast);
    std::vector<TileId> half(f.all.begin(), f.all.begin() + f.all.size() / 2);
    std::uint64_t half_bytes = 0;
    for (auto t : half) half_bytes += f.manifest.tiles[t].byte_length;
    CHECK(EdgeCache(*f.ds, {.capacity_bytes = half_bytes, .mode = std::nullopt}, half).mode() == CacheMode::raw);
  }

  TEST_CASE("admission stops at the first tile that does not fit") {
    Fixture f;
    const auto& t = f.manifest.tiles;
    REQUIRE(t.size() >= 3);
    // Tile 1 does not fit; later tiles are not admitted even if they would.
    std::uint64_t cap = t[0].byte_length + t[1].byte_length - 1;
    EdgeCache cache(*f.ds, {.capacity_bytes = cap, .mode = CacheMode::raw}, f.all);
    for (auto id : f.all) cache.get_tile(id);
    CHECK(cache.stats().bytes_resident == t[0].byte_length);
    for (auto id : f.all) cache.get_tile(id);
    CHECK(cache.stats().hits == 1);
  }

  TEST_CASE("larger capacity never adds misses") {
    Fixture f;
    std::uint64_t prev = ~0ULL;
    for (std::uint64_t cap = 0; cap <= f.manifest.total_tile_bytes() + 100; cap += f.manifest.total_tile_bytes() / 13) {
      EdgeCache cache(*f.ds, {.capacity_bytes = cap, .mode = CacheMode::raw}, f.all);
      for (int round = 0; round < 4; ++round)
        for (auto id : f.all) cache.get_tile(id);
      auto misses = cache.stats().misses;
      CHECK(misses <= prev);
      CHECK(cache.stats().bytes_resident <= cap);
      prev = misses;
    }
  }

  TEST_CASE("concurrent readers see consistent tiles") {
    Fixture f;
    EdgeCache cache(*f.ds, {.capacity_bytes = f.manifest.total_tile_bytes() / 2, .mode = CacheMode::fast}, f.all);
    std::vector<Tile> expected;
    for (auto id : f.all) expected.push_back(f.ds->load_tile(id));
    std::atomic<int> bad{0};
    {
      std::vector<std::jthread> threads;
      for (int w = 0; w < 4; ++w)
        threads.emplace_back([&] {
          for (int round = 0; round < 3; ++round)
            for (auto id : f.all)
              if (!(cache.get_tile(id) == expected[id])) ++bad;
        });
    }
    CHECK(bad == 0);
    auto s = cache.stats();
    CHECK(s.hits + s.misses == 12 * f.all.size());
    CHECK(s.bytes_resident <= cache.capacity());
  }

  TEST_CASE("unknown tile") {
    Fixture f;
    EdgeCache cache(*f.ds, {.capacity_bytes = 10, .mode = std::nullopt}, f.all);
    CHECK_THROWS_AS(cache.get_tile(static_cast<TileId>(f.all.size())), DomainError);
  }
}
