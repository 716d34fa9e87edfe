#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tilegraph::cost {

/// Inputs of the memory and resource formulas. Counts are doubles so that
/// billion-scale what-ifs need no special casing.
struct WorkloadParams {
  double vertices = 0.0;
  double edges = 0.0;
  /// Defaults to edges / vertices.
  std::optional<double> avg_degree;
  double servers = 1.0;
  double workers = 1.0;
  double tiles = 1.0;
  /// Per-vertex bytes under all-in-all replication (value, message, out-degree).
  double bytes_vertex_msg = 20.0;
  /// Per-vertex bytes under on-demand replication (adds a 4-byte id).
  double bytes_id_vertex_msg = 24.0;
  double bytes_tile = 0.0;
  double replication = 1.0;
  /// Defaults to combining_ratio(avg_degree, workers, servers).
  std::optional<double> eta;
  double beta = 1.0;

  double degree() const noexcept;
  /// DomainError on negative or non-finite fields, or servers/workers < 1.
  void validate() const;
};

/// Bytes per server when every server keeps every vertex.
double memory_aa(const WorkloadParams& p);
/// Bytes per server when servers keep only the vertices their tiles touch.
double memory_od(const WorkloadParams& p, double expected_od_vertices);

struct OdEstimate {
  /// (1 - e^(-d/N))·|V| + |V|/N. May exceed |V|.
  double bound = 0.0;
  /// min(bound, |V|).
  double capped = 0.0;
};
OdEstimate expected_od_vertices(double vertices, double avg_degree, double servers);

/// Fraction of messages left after per-worker combining; in (0, 1].
double combining_ratio(double avg_degree, double workers, double servers);

/// Smallest server count in [1, limit] at which on-demand replication (using
/// the uncapped bound) needs less memory than all-in-all, or nullopt.
std::optional<unsigned> od_crossover_servers(WorkloadParams p, unsigned limit = 4096);

struct ResourceCell {
  /// Symbolic form, "-" when the system does not use the resource.
  std::string expression;
  /// Evaluated with unit constants; 0 for "-".
  double value = 0.0;
};

/// Asymptotic per-resource usage with unit constants; estimates only.
struct ResourceRow {
  std::string system;
  ResourceCell ram_vertex, ram_edge, ram_msg, network, disk_read, disk_write;
};

inline constexpr std::string_view kSystems[] = {"pregel+", "powergraph", "graphd", "chaos", "tilegraph"};

/// DomainError for an unknown system, or tiles < servers where the formula
/// depends on the tile count.
ResourceRow resource_row(std::string_view system, const WorkloadParams& p);

}  // namespace tilegraph::cost
