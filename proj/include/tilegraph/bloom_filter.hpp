#pragma once

#include <cstdint>
#include <vector>

#include "tilegraph/types.hpp"

namespace tilegraph {

/// Bloom filter over vertex ids, used to skip tiles whose sources were not
/// updated. 10 bits per key and 7 probes (about 1% false positives); probes
/// come from double hashing with two fixed seeds so filters are portable
/// across processes and persisted datasets.
class BloomFilter {
 public:
  static constexpr std::uint32_t kBitsPerKey = 10;
  static constexpr std::uint32_t kHashCount = 7;
  static constexpr std::uint64_t kSeedA = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedB = 0xc2b2ae3d27d4eb4fULL;

  BloomFilter() = default;
  /// Sized for `expected_keys` distinct keys; zero keys gives an empty filter
  /// that rejects everything.
  explicit BloomFilter(std::uint64_t expected_keys);
  BloomFilter(std::uint64_t num_bits, std::uint32_t num_hashes, std::vector<std::uint64_t> words);

  void insert(VertexId key);
  bool may_contain(VertexId key) const;

  std::uint64_t num_bits() const noexcept { return num_bits_; }
  std::uint32_t num_hashes() const noexcept { return num_hashes_; }
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  friend bool operator==(const BloomFilter&, const BloomFilter&) = default;

 private:
  std::uint64_t num_bits_ = 0;
  std::uint32_t num_hashes_ = kHashCount;
  std::vector<std::uint64_t> words_;
};

}  // namespace tilegraph
