#include "tilegraph/edge_cache.hpp"

#include <limits>
#include <string>

#include "tilegraph/errors.hpp"

namespace tilegraph {

double planned_ratio(CacheMode mode) {
  switch (mode) {
    case CacheMode::raw: return 1.0;
    case CacheMode::fast: return 2.0;
    case CacheMode::balanced: return 4.0;
    case CacheMode::high: return 5.0;
  }
  throw DomainError("unknown cache mode");
}

CodecRole codec_of(CacheMode mode) {
  switch (mode) {
    case CacheMode::raw: return CodecRole::none;
    case CacheMode::fast: return CodecRole::fast;
    case CacheMode::balanced: return CodecRole::balanced;
    case CacheMode::high: return CodecRole::high;
  }
  throw DomainError("unknown cache mode");
}

CacheMode parse_cache_mode(std::string_view text) {
  if (text.size() == 1 && text[0] >= '1' && text[0] <= '4') return static_cast<CacheMode>(text[0] - '0');
  throw DomainError("cache mode must be 1, 2, 3 or 4 (got '" + std::string(text) + "')");
}

CacheMode select_mode(std::uint64_t total_tile_bytes, std::uint64_t capacity) {
  // bytes / gamma <= capacity, evaluated as bytes <= capacity * gamma.
  for (auto mode : {CacheMode::raw, CacheMode::fast, CacheMode::balanced, CacheMode::high}) {
    auto gamma = static_cast<std::uint64_t>(planned_ratio(mode));
    if (capacity > std::numeric_limits<std::uint64_t>::max() / gamma || total_tile_bytes <= capacity * gamma)
      return mode;
  }
  return CacheMode::balanced;
}

CacheStats CacheStats::since(const CacheStats& earlier) const noexcept {
  CacheStats d = *this;
  d.hits -= earlier.hits;
  d.misses -= earlier.misses;
  d.evictions -= earlier.evictions;
  d.disk_reads -= earlier.disk_reads;
  d.disk_bytes_read -= earlier.disk_bytes_read;
  d.raw_bytes_admitted -= earlier.raw_bytes_admitted;
  d.compressed_bytes_admitted -= earlier.compressed_bytes_admitted;
  return d;
}

EdgeCache::EdgeCache(const Dataset& dataset, CacheConfig config, std::span<const TileId> planned_tiles)
    : dataset_(dataset), config_(config), entries_(dataset.manifest().tile_count()) {
  if (config_.mode) {
    mode_ = *config_.mode;
  } else {
    std::uint64_t total = 0;
    for (auto t : planned_tiles) total += dataset.manifest().tiles.at(t).byte_length;
    mode_ = select_mode(total, config_.capacity_bytes);
  }
}

Tile EdgeCache::get_tile(TileId t) {
  if (t >= entries_.size()) throw DomainError("tile " + std::to_string(t) + " not in dataset");
  std::shared_ptr<const Entry> entry;
  {
    std::lock_guard lock(mu_);
    entry = entries_[t];
  }
  if (entry) {
    hits_.fetch_add(1, std::memory_order_relaxed);
    return decode_tile(decompress(codec_of(mode_), entry->packed, entry->raw_size));
  }

  misses_.fetch_add(1, std::memory_order_relaxed);
  Bytes raw = dataset_.read_tile_bytes(t);
  disk_reads_.fetch_add(1, std::memory_order_relaxed);
  disk_bytes_.fetch_add(raw.size(), std::memory_order_relaxed);
  Tile tile = decode_tile(raw);

  bool may_admit;
  {
    std::lock_guard lock(mu_);
    may_admit = !sealed_ && !entries_[t] && bytes_resident_ < config_.capacity_bytes;
    if (!may_admit && !entries_[t] && bytes_resident_ >= config_.capacity_bytes) sealed_ = true;
  }
  if (may_admit) {
    auto fresh = std::make_shared<Entry>();
    fresh->raw_size = raw.size();
    fresh->packed = (mode_ == CacheMode::raw) ? std::move(raw) : compress(codec_of(mode_), raw);
    std::lock_guard lock(mu_);
    if (!sealed_ && !entries_[t]) {
      if (bytes_resident_ + fresh->packed.size() <= config_.capacity_bytes) {
        bytes_resident_ += fresh->packed.size();
        raw_admitted_ += fresh->raw_size;
        packed_admitted_ += fresh->packed.size();
        entries_[t] = std::move(fresh);
      } else {
        sealed_ = true;
      }
    }
  }
  return tile;
}

CacheStats EdgeCache::stats() const {
  CacheStats s;
  s.hits = hits_.load();
  s.misses = misses_.load();
  s.disk_reads = disk_reads_.load();
  s.disk_bytes_read = disk_bytes_.load();
  std::lock_guard lock(mu_);
  s.bytes_resident = bytes_resident_;
  s.raw_bytes_admitted = raw_admitted_;
  s.compressed_bytes_admitted = packed_admitted_;
  return s;
}

}  // namespace tilegraph
