#include "tilegraph/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tilegraph/errors.hpp"

namespace tilegraph::cost {
namespace {

void require_nonneg(double x, const char* name) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError(std::string(name) + " must be finite and >= 0");
}

ResourceCell none() { return {"-", 0.0}; }

}  // namespace

double WorkloadParams::degree() const noexcept {
  if (avg_degree) return *avg_degree;
  return vertices > 0.0 ? edges / vertices : 0.0;
}

void WorkloadParams::validate() const {
  require_nonneg(vertices, "vertices");
  require_nonneg(edges, "edges");
  require_nonneg(degree(), "avg_degree");
  require_nonneg(tiles, "tiles");
  require_nonneg(bytes_vertex_msg, "bytes_vertex_msg");
  require_nonneg(bytes_id_vertex_msg, "bytes_id_vertex_msg");
  require_nonneg(bytes_tile, "bytes_tile");
  require_nonneg(replication, "replication");
  require_nonneg(beta, "beta");
  if (eta) require_nonneg(*eta, "eta");
  if (!(servers >= 1.0) || !std::isfinite(servers)) throw DomainError("servers must be >= 1");
  if (!(workers >= 1.0) || !std::isfinite(workers)) throw DomainError("workers must be >= 1");
}

double memory_aa(const WorkloadParams& p) {
  p.validate();
  return p.bytes_vertex_msg * p.vertices + p.bytes_tile * p.workers;
}

double memory_od(const WorkloadParams& p, double expected_od_vertices) {
  p.validate();
  require_nonneg(expected_od_vertices, "expected_od_vertices");
  return p.bytes_id_vertex_msg * expected_od_vertices + p.bytes_tile * p.workers;
}

OdEstimate expected_od_vertices(double vertices, double avg_degree, double servers) {
  require_nonneg(vertices, "vertices");
  require_nonneg(avg_degree, "avg_degree");
  if (!(servers >= 1.0)) throw DomainError("servers must be >= 1");
  OdEstimate e;
  e.bound = -std::expm1(-avg_degree / servers) * vertices + vertices / servers;
  e.capped = std::min(e.bound, vertices);
  return e;
}

double combining_ratio(double avg_degree, double workers, double servers) {
  require_nonneg(avg_degree, "avg_degree");
  const double tn = workers * servers;
  if (!(tn >= 1.0)) throw DomainError("workers * servers must be >= 1");
  if (avg_degree == 0.0) return 1.0;
  const double eta = -std::expm1(-avg_degree / tn) * tn / avg_degree;
  return std::clamp(eta, std::numeric_limits<double>::min(), 1.0);
}

std::optional<unsigned> od_crossover_servers(WorkloadParams p, unsigned limit) {
  for (unsigned n = 1; n <= limit; ++n) {
    p.servers = n;
    auto od = expected_od_vertices(p.vertices, p.degree(), n);
    if (memory_od(p, od.bound) < memory_aa(p)) return n;
  }
  return std::nullopt;
}

ResourceRow resource_row(std::string_view system, const WorkloadParams& p) {
  p.validate();
  const double V = p.vertices, E = p.edges, N = p.servers, P = p.tiles, M = p.replication;
  const double eta = p.eta ? *p.eta : combining_ratio(p.degree(), p.workers, p.servers);
  auto need_tiles = [&] {
    if (P < N) throw DomainError("tile count must be >= server count");
  };

  ResourceRow r;
  r.system = std::string(system);
  if (system == "pregel+") {
    r.ram_vertex = {"|V|", V};
    r.ram_edge = {"|E|", E};
    r.ram_msg = {"eta|E|+|V|", eta * E + V};
    r.network = {"eta|E|", eta * E};
    r.disk_read = none();
    r.disk_write = none();
  } else if (system == "powergraph") {
    r.ram_vertex = {"M|V|", M * V};
    r.ram_edge = {"2|E|", 2 * E};
    r.ram_msg = {"M|V|", M * V};
    r.network = {"2M|V|", 2 * M * V};
    r.disk_read = none();
    r.disk_write = none();
  } else if (system == "graphd") {
    r.ram_vertex = {"|V|", V};
    r.ram_edge = {"1", 1};
    r.ram_msg = {"1", 1};
    r.network = {"eta|E|", eta * E};
    r.disk_read = {"2|E|", 2 * E};
    r.disk_write = {"|E|", E};
  } else if (system == "chaos") {
    need_tiles();
    r.ram_vertex = {"N|V|/P", P == 0 ? 0 : N * V / P};
    r.ram_edge = {"1", 1};
    r.ram_msg = {"1", 1};
    r.network = {"3|E|+3|V|", 3 * E + 3 * V};
    r.disk_read = {"2|E|+2|V|", 2 * E + 2 * V};
    r.disk_write = {"|E|+|V|", E + V};
  } else if (system == "tilegraph") {
    need_tiles();
    r.ram_vertex = {"N|V|", N * V};
    r.ram_edge = {"N|E|/P", P == 0 ? 0 : N * E / P};
    r.ram_msg = {"N|V|", N * V};
    r.network = {"N|V|", N * V};
    r.disk_read = {"beta|E|", p.beta * E};
    r.disk_write = none();
  } else {
    throw DomainError("unknown system '" + std::string(system) + "'");
  }
  return r;
}

}  // namespace tilegraph::cost
