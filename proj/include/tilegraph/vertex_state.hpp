#pragma once

#include <cstdint>
#include <vector>

#include "tilegraph/bitset.hpp"
#include "tilegraph/types.hpp"

namespace tilegraph {

/// Per-server replica of every vertex (all-in-all layout): one dense slot per
/// vertex id for the current value, the next-superstep value, and flags.
struct VertexStateArrays {
  explicit VertexStateArrays(std::size_t vertex_count = 0)
      : value(vertex_count, 0.0),
        updated_value(vertex_count, 0.0),
        updated_flags(vertex_count),
        prev_updated_flags(vertex_count) {}

  std::size_t size() const noexcept { return value.size(); }

  std::vector<double> value;
  /// Filled only by programs that need it (PageRank).
  std::vector<std::uint32_t> out_degree;
  std::vector<double> updated_value;
  /// Written this superstep.
  ConcurrentBitset updated_flags;
  /// Written last superstep; drives tile skipping.
  ConcurrentBitset prev_updated_flags;

  /// Single-producer write of a next-superstep value.
  void stage(VertexId v, double x) noexcept {
    updated_value[v] = x;
    updated_flags.set(v);
  }
};

}  // namespace tilegraph
