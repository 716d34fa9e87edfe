#include <doctest.h>

#include <random>

#include "tilegraph/algorithms.hpp"
#include "tilegraph/errors.hpp"
#include "tilegraph/reference.hpp"
#include "test_support.hpp"

using namespace tilegraph;
using tilegraph::testing::TempDir;

namespace {

InEdges in(const std::vector<VertexId>& src, const std::vector<double>& w = {}) { return {src, w}; }

}  // namespace

TEST_SUITE("algorithms") {
  TEST_CASE("pagerank init") {
    for (auto [edges, n] : {std::pair{std::vector<EdgeRecord>{{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 4u},
                            std::pair{std::vector<EdgeRecord>{{0, 0}}, 1u}}) {
      TempDir dir;
      testing::build_dataset(edges, false, 1, dir.path());
      auto ds = Dataset::open(dir.path());
      VertexStateArrays s(n);
      PageRankProgram p;
      p.init(s, ds);
      for (double x : s.value) CHECK(x == 1.0 / n);
      CHECK(s.out_degree == ds.load_out_degree());
    }
  }

  TEST_CASE("pagerank gather and apply") {
    PageRankProgram p;
    VertexStateArrays s(4);
    s.out_degree = {1, 1, 1, 0};
    s.value = {0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(p.gather(1, in({0}), s) == 0.5);
    CHECK(p.gather(1, in({}), s) == 0.0);
    s.value = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0};
    CHECK(p.gather(3, in({0, 1, 2}), s) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(p.gather(0, in({3}), s), ConsistencyError);

    p.set_vertex_count(4);
    CHECK(p.apply(0.0, 0.0) == doctest::Approx(0.0375).epsilon(1e-15));
    p.set_vertex_count(2);
    CHECK(p.apply(0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-15));

    PageRankProgram eps({.epsilon = 1e-3});
    eps.set_vertex_count(2);
    CHECK(eps.apply(0.5, 0.5004) == 0.5004);
    CHECK(eps.apply(0.5, 0.49) == doctest::Approx(0.5));
    CHECK_THROWS_AS(PageRankProgram({.epsilon = -1}), DomainError);
    CHECK_THROWS_AS(PageRankProgram({.damping = 0.9, .teleport = 0.2}), DomainError);
  }

  TEST_CASE("pagerank self-loop converges to 1") {
    PageRankProgram p;
    p.set_vertex_count(1);
    VertexStateArrays s(1);
    s.out_degree = {1};
    s.value = {1.0};
    for (int i = 0; i < 400; ++i) s.value[0] = p.apply(p.gather(0, in({0}), s), s.value[0]);
    CHECK(s.value[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("sssp init, gather and apply") {
    SsspProgram p({.source = 0});
    VertexStateArrays s(3);
    p.init_values(s);
    CHECK(s.value == std::vector<double>{0.0, kInfinity, kInfinity});
    p.init_values(s);
    CHECK(s.value == std::vector<double>{0.0, kInfinity, kInfinity});
    VertexStateArrays one(1);
    p.init_values(one);
    CHECK(one.value == std::vector<double>{0.0});
    VertexStateArrays none(0);
    CHECK_THROWS_AS(p.init_values(none), DomainError);
    CHECK_THROWS_AS(SsspProgram({.source = 3}).init_values(s), DomainError);

    CHECK(p.gather(2, in({1}), s) == kInfinity);
    CHECK(p.gather(2, in({0}, {3.0}), s) == 3.0);
    CHECK(p.gather(2, in({0}), s) == 1.0);
    CHECK(p.gather(2, in({}), s) == kInfinity);
    s.value = {5.0 - 3.0, 1.0, kInfinity};
    CHECK(p.gather(2, in({0, 1}, {3.0, 3.0}), s) == 4.0);
    CHECK(p.apply(kInfinity, 0.0) == 0.0);
    CHECK(p.apply(4.0, 5.0) == 4.0);
    CHECK(p.apply(kInfinity, kInfinity) == kInfinity);
  }

  TEST_CASE("program factory") {
    CHECK(make_program_factory("pagerank", {})()->name() == "pagerank");
    CHECK(make_program_factory("sssp", {.source = 0})()->name() == "sssp");
    CHECK_THROWS_AS(make_program_factory("sssp", {}), DomainError);
    CHECK_THROWS_AS(make_program_factory("wcc", {}), DomainError);
  }

  TEST_CASE("reference oracles") {
    std::vector<EdgeRecord> two_cycle{{0, 1}, {1, 0}};
    for (std::uint32_t k : {0u, 1u, 7u}) CHECK(reference_pagerank(two_cycle, 2, k) == std::vector<double>{0.5, 0.5});
    std::vector<EdgeRecord> path{{0, 1}, {1, 2}};
    auto sp = reference_sssp(path, 3, false, 0);
    CHECK(sp.distance == std::vector<double>{0, 1, 2});
    CHECK(sp.max_hops == 2);
    CHECK_THROWS_AS(reference_sssp(path, 3, false, 3), DomainError);
    CHECK_THROWS_AS(reference_pagerank(path, 0, 1), DomainError);

    // A cheap long path and an expensive short one: hops follow the cheap one.
    std::vector<EdgeRecord> g{{0, 3, 10}, {0, 1, 1}, {1, 2, 1}, {2, 3, 1}};
    sp = reference_sssp(g, 4, true, 0);
    CHECK(sp.distance[3] == 3.0);
    CHECK(sp.hops[3] == 3);
    // Ties prefer fewer hops.
    std::vector<EdgeRecord> tie{{0, 2, 2}, {0, 1, 1}, {1, 2, 1}};
    CHECK(reference_sssp(tie, 3, true, 0).hops[2] == 1);
  }

  TEST_CASE("reference oracles agree with the naive test oracles") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 30; ++i) {
      std::uint32_t n = 2 + static_cast<std::uint32_t>(rng() % 200);
      auto edges = testing::random_graph({.vertices = n, .edges = n * 4, .weighted = true}, rng);
      CHECK(testing::max_abs_diff(reference_pagerank(edges, n, 15), testing::naive_pagerank(edges, n, 15)) <= 1e-13);
      auto bf = testing::naive_sssp(edges, n, true, 0);
      auto dj = reference_sssp(edges, n, true, 0);
      CHECK(dj.distance == bf.distance);
      CHECK(bf.rounds == dj.max_hops + 1);
    }
  }

  TEST_CASE("pagerank conserves mass without dangling vertices") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10; ++i) {
      std::uint32_t n = 2 + static_cast<std::uint32_t>(rng() % 300);
      auto edges = testing::random_graph({.vertices = n, .edges = n * 3, .shape = testing::DegreeShape::power_law}, rng);
      testing::remove_dangling(edges, n, rng);
      for (std::uint32_t k = 1; k <= 20; ++k) {
        auto x = reference_pagerank(edges, n, k);
        double sum = 0;
        for (double v : x) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}
