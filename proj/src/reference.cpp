#include "tilegraph/reference.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>

#include "tilegraph/errors.hpp"

namespace tilegraph {

std::vector<double> reference_pagerank(std::span<const EdgeRecord> edges, std::uint64_t vertex_count,
                                       std::uint32_t iterations, const PageRankParams& params) {
  if (vertex_count == 0) throw DomainError("pagerank on an empty graph");
  const auto n = static_cast<std::size_t>(vertex_count);
  std::vector<std::uint32_t> out_degree(n, 0);
  std::vector<std::vector<VertexId>> in(n);
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n) throw DomainError("edge endpoint out of range");
    ++out_degree[e.src];
    in[e.dst].push_back(e.src);
  }
  for (auto& list : in) std::sort(list.begin(), list.end());

  std::vector<double> value(n, 1.0 / static_cast<double>(vertex_count)), next(n);
  for (std::uint32_t it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < n; ++v) {
      double accum = 0.0;
      for (VertexId u : in[v]) accum += value[u] / static_cast<double>(out_degree[u]);
      double x = params.teleport / static_cast<double>(vertex_count) + params.damping * accum;
      next[v] = (params.epsilon > 0.0 && std::abs(x - value[v]) <= params.epsilon) ? value[v] : x;
    }
    value.swap(next);
  }
  return value;
}

ShortestPaths reference_sssp(std::span<const EdgeRecord> edges, std::uint64_t vertex_count, bool weighted,
                             VertexId source) {
  if (source >= vertex_count)
    throw DomainError("source " + std::to_string(source) + " out of range for |V| = " + std::to_string(vertex_count));
  const auto n = static_cast<std::size_t>(vertex_count);
  std::vector<std::vector<std::pair<VertexId, double>>> out(n);
  for (const auto& e : edges) {
    double w = weighted ? e.weight : 1.0;
    if (w < 0.0) throw DomainError("negative edge weight");
    out[e.src].emplace_back(e.dst, w);
  }

  ShortestPaths r;
  r.distance.assign(n, kInfinity);
  r.hops.assign(n, 0);
  std::vector<bool> done(n, false);
  using Item = std::tuple<double, std::uint32_t, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  r.distance[source] = 0.0;
  queue.emplace(0.0, 0, source);
  while (!queue.empty()) {
    auto [d, h, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    r.max_hops = std::max(r.max_hops, h);
    for (auto [v, w] : out[u]) {
      double nd = d + w;
      std::uint32_t nh = h + 1;
      if (nd < r.distance[v] || (nd == r.distance[v] && !done[v] && nh < r.hops[v])) {
        r.distance[v] = nd;
        r.hops[v] = nh;
        queue.emplace(nd, nh, v);
      }
    }
  }
  return r;
}

}  // namespace tilegraph
