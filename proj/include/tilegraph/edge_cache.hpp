#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tilegraph/codec.hpp"
#include "tilegraph/dataset.hpp"
#include "tilegraph/tile.hpp"

namespace tilegraph {

/// Storage format of cached tiles. Planning ratios gamma = 1, 2, 4, 5.
enum class CacheMode : std::uint8_t { raw = 1, fast = 2, balanced = 3, high = 4 };

double planned_ratio(CacheMode mode);
CodecRole codec_of(CacheMode mode);
/// Accepts "1".."4".
CacheMode parse_cache_mode(std::string_view text);

/// Smallest mode whose planned footprint total_tile_bytes / gamma fits in
/// capacity; mode 3 when none does.
CacheMode select_mode(std::uint64_t total_tile_bytes, std::uint64_t capacity);

struct CacheConfig {
  std::uint64_t capacity_bytes = 0;
  /// nullopt selects automatically from the bytes the cache may have to hold.
  std::optional<CacheMode> mode;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t bytes_resident = 0;
  std::uint64_t disk_reads = 0;
  std::uint64_t disk_bytes_read = 0;
  /// Encoded-tile bytes and their compressed size over all admitted entries.
  std::uint64_t raw_bytes_admitted = 0;
  std::uint64_t compressed_bytes_admitted = 0;

  double miss_ratio() const noexcept {
    auto total = hits + misses;
    return total == 0 ? 0.0 : static_cast<double>(misses) / static_cast<double>(total);
  }
  double measured_ratio() const noexcept {
    return compressed_bytes_admitted == 0 ? 1.0
                                          : static_cast<double>(raw_bytes_admitted) /
                                                static_cast<double>(compressed_bytes_admitted);
  }
  /// Counter difference (this - earlier); bytes_resident is kept as-is.
  CacheStats since(const CacheStats& earlier) const noexcept;
};

/// Read-through tile cache. Entries are admitted until the first entry that
/// does not fit; after that the cache is sealed and nothing is evicted, so the
/// resident set is a prefix of the first-touch order.
class EdgeCache {
 public:
  /// `planned_tiles` are the tiles this cache will serve; their encoded size
  /// drives automatic mode selection.
  EdgeCache(const Dataset& dataset, CacheConfig config, std::span<const TileId> planned_tiles);
  EdgeCache(const EdgeCache&) = delete;
  EdgeCache& operator=(const EdgeCache&) = delete;

  /// Safe to call concurrently.
  Tile get_tile(TileId t);
  CacheStats stats() const;
  CacheMode mode() const noexcept { return mode_; }
  std::uint64_t capacity() const noexcept { return config_.capacity_bytes; }

 private:
  struct Entry {
    Bytes packed;
    std::size_t raw_size = 0;
  };

  const Dataset& dataset_;
  CacheConfig config_;
  CacheMode mode_;

  mutable std::mutex mu_;
  std::vector<std::shared_ptr<const Entry>> entries_;
  std::uint64_t bytes_resident_ = 0;
  std::uint64_t raw_admitted_ = 0;
  std::uint64_t packed_admitted_ = 0;
  bool sealed_ = false;

  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::atomic<std::uint64_t> disk_reads_{0};
  std::atomic<std::uint64_t> disk_bytes_{0};
};

}  // namespace tilegraph
