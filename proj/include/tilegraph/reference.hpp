#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tilegraph/algorithms.hpp"
#include "tilegraph/ingest.hpp"

namespace tilegraph {

/// k synchronous PageRank iterations over an in-memory edge list. Each
/// vertex sums its in-edges in ascending source order.
std::vector<double> reference_pagerank(std::span<const EdgeRecord> edges, std::uint64_t vertex_count,
                                       std::uint32_t iterations, const PageRankParams& params = {});

struct ShortestPaths {
  /// kInfinity for unreachable vertices.
  std::vector<double> distance;
  /// Fewest edges over all shortest paths; 0 for unreachable vertices.
  std::vector<std::uint32_t> hops;
  /// Largest entry of `hops`.
  std::uint32_t max_hops = 0;
};

/// Dijkstra. Unweighted lists (`weighted` false) use weight 1.
ShortestPaths reference_sssp(std::span<const EdgeRecord> edges, std::uint64_t vertex_count, bool weighted,
                             VertexId source);

}  // namespace tilegraph
