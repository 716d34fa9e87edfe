#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "tilegraph/engine.hpp"

namespace tilegraph {

struct PageRankParams {
  double damping = 0.85;
  double teleport = 0.15;
  /// Changes of at most epsilon are not reported as updates; 0 means any
  /// bit-level change counts.
  double epsilon = 0.0;
};

/// value = teleport/|V| + damping * sum(value[u] / out_degree[u]).
/// Dangling vertices keep their mass; nothing is redistributed.
class PageRankProgram final : public VertexProgram {
 public:
  explicit PageRankProgram(PageRankParams params = {});

  std::string_view name() const override { return "pagerank"; }
  void init(VertexStateArrays& states, const Dataset& dataset) override;
  double gather(VertexId v, const InEdges& in_edges, const VertexStateArrays& states) const override;
  double apply(double accum, double old_value) const override;

  /// For driving the program without a dataset (tests).
  void set_vertex_count(std::uint64_t n) noexcept { vertex_count_ = n; }

 private:
  PageRankParams params_;
  std::uint64_t vertex_count_ = 0;
};

struct SsspParams {
  VertexId source = 0;
};

/// Single-source shortest paths by repeated relaxation. Unreachable vertices
/// hold kInfinity; unweighted datasets use weight 1 per edge.
class SsspProgram final : public VertexProgram {
 public:
  explicit SsspProgram(SsspParams params) : params_(params) {}

  std::string_view name() const override { return "sssp"; }
  void init(VertexStateArrays& states, const Dataset& dataset) override;
  double gather(VertexId v, const InEdges& in_edges, const VertexStateArrays& states) const override;
  double apply(double accum, double old_value) const override;

  /// Sets values for |V| = states.size() without touching a dataset.
  void init_values(VertexStateArrays& states) const;

 private:
  SsspParams params_;
};

struct AlgorithmOptions {
  PageRankParams pagerank;
  /// Required for sssp; dense id.
  std::optional<VertexId> source;
};

/// Factory for "pagerank" or "sssp"; DomainError for anything else or for
/// sssp without a source.
ProgramFactory make_program_factory(std::string_view algo, const AlgorithmOptions& options);

}  // namespace tilegraph
