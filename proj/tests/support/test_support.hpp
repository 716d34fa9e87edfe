#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tilegraph/dataset.hpp"
#include "tilegraph/ingest.hpp"

namespace tilegraph::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

enum class DegreeShape { uniform, power_law };

struct GraphSpec {
  std::uint32_t vertices = 10;
  std::uint64_t edges = 20;
  DegreeShape shape = DegreeShape::uniform;
  /// Integer weights in [1, max_weight] when true.
  bool weighted = false;
  std::uint32_t max_weight = 10;
};

/// Random multigraph over exactly `vertices` dense ids (the last id always
/// appears, so |V| survives max-id+1 inference).
std::vector<EdgeRecord> random_graph(const GraphSpec& spec, std::mt19937_64& rng);

/// Every vertex gets at least one out-edge.
void remove_dangling(std::vector<EdgeRecord>& edges, std::uint32_t vertices, std::mt19937_64& rng);

/// Partitions dense edges straight into `dir`.
DatasetManifest build_dataset(const std::vector<EdgeRecord>& edges, bool weighted, std::uint64_t tile_size,
                              const std::filesystem::path& dir);

/// Writes `src dst [weight]` lines.
void write_edge_list(const std::vector<EdgeRecord>& edges, bool weighted, const std::filesystem::path& file);

/// Straightforward power iteration, written independently of the library.
std::vector<double> naive_pagerank(const std::vector<EdgeRecord>& edges, std::uint32_t vertices,
                                   std::uint32_t iterations);

struct BellmanFord {
  std::vector<double> distance;  // kInfinity when unreachable
  /// Synchronous rounds until nothing changes, counting the quiet round.
  std::uint32_t rounds = 0;
};
BellmanFord naive_sssp(const std::vector<EdgeRecord>& edges, std::uint32_t vertices, bool weighted,
                       std::uint32_t source);

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tilegraph::testing
