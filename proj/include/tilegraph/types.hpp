#pragma once

#include <cstdint>
#include <limits>

namespace tilegraph {

/// Dense (post-compaction) vertex id.
using VertexId = std::uint32_t;
/// Vertex id as it appears in the input edge list.
using RawVertexId = std::uint64_t;
using EdgeCount = std::uint64_t;
using TileId = std::uint32_t;

/// Distance sentinel for unreachable vertices. Finite so that it serializes
/// and compares like any other value.
inline constexpr double kInfinity = std::numeric_limits<double>::max();

/// Dense ids are 32-bit; |V| must stay below this.
inline constexpr std::uint64_t kMaxVertexCount = std::numeric_limits<VertexId>::max();

}  // namespace tilegraph
