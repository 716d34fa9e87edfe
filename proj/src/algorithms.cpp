#include "tilegraph/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tilegraph/errors.hpp"

namespace tilegraph {

PageRankProgram::PageRankProgram(PageRankParams params) : params_(params) {
  if (!(params_.epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
  if (!(params_.damping >= 0.0 && params_.teleport >= 0.0) ||
      std::abs(params_.damping + params_.teleport - 1.0) > 1e-12)
    throw DomainError("damping and teleport must be nonnegative and sum to 1");
}

void PageRankProgram::init(VertexStateArrays& states, const Dataset& dataset) {
  vertex_count_ = dataset.manifest().vertex_count;
  if (vertex_count_ == 0) throw DomainError("pagerank on an empty graph");
  states.out_degree = dataset.load_out_degree();
  if (states.out_degree.size() != vertex_count_)
    throw ConsistencyError("out-degree array has " + std::to_string(states.out_degree.size()) + " entries, |V| is " +
                           std::to_string(vertex_count_));
  std::fill(states.value.begin(), states.value.end(), 1.0 / static_cast<double>(vertex_count_));
}

double PageRankProgram::gather(VertexId v, const InEdges& in_edges, const VertexStateArrays& states) const {
  double accum = 0.0;
  for (VertexId u : in_edges.sources) {
    auto d = states.out_degree[u];
    if (d == 0)
      throw ConsistencyError("vertex " + std::to_string(u) + " has out-degree 0 but an edge to " + std::to_string(v));
    accum += states.value[u] / static_cast<double>(d);
  }
  return accum;
}

double PageRankProgram::apply(double accum, double old_value) const {
  double next = params_.teleport / static_cast<double>(vertex_count_) + params_.damping * accum;
  if (params_.epsilon > 0.0 && std::abs(next - old_value) <= params_.epsilon) return old_value;
  return next;
}

void SsspProgram::init_values(VertexStateArrays& states) const {
  if (params_.source >= states.size())
    throw DomainError("source " + std::to_string(params_.source) + " out of range for |V| = " +
                      std::to_string(states.size()));
  std::fill(states.value.begin(), states.value.end(), kInfinity);
  states.value[params_.source] = 0.0;
}

void SsspProgram::init(VertexStateArrays& states, const Dataset& dataset) {
  const auto& m = dataset.manifest();
  if (m.weighted && m.edge_count > 0 && m.min_weight < 0.0)
    throw DomainError("sssp needs nonnegative weights; smallest weight is " + std::to_string(m.min_weight));
  init_values(states);
}

double SsspProgram::gather(VertexId, const InEdges& in_edges, const VertexStateArrays& states) const {
  double best = kInfinity;
  for (std::size_t i = 0; i < in_edges.sources.size(); ++i) {
    double d = states.value[in_edges.sources[i]];
    if (d == kInfinity) continue;
    double w = in_edges.weights.empty() ? 1.0 : in_edges.weights[i];
    best = std::min(best, std::min(d + w, kInfinity));
  }
  return best;
}

double SsspProgram::apply(double accum, double old_value) const { return std::min(accum, old_value); }

ProgramFactory make_program_factory(std::string_view algo, const AlgorithmOptions& options) {
  if (algo == "pagerank") {
    PageRankParams p = options.pagerank;
    PageRankProgram check(p);  // validate eagerly
    return [p] { return std::make_unique<PageRankProgram>(p); };
  }
  if (algo == "sssp") {
    if (!options.source) throw DomainError("sssp needs a source vertex");
    SsspParams p{*options.source};
    return [p] { return std::make_unique<SsspProgram>(p); };
  }
  throw DomainError("unknown algorithm '" + std::string(algo) + "'");
}

}  // namespace tilegraph
