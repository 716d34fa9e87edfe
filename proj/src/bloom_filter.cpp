#include "tilegraph/bloom_filter.hpp"

#include "tilegraph/errors.hpp"

namespace tilegraph {
namespace {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

}  // namespace

BloomFilter::BloomFilter(std::uint64_t expected_keys) {
  if (expected_keys == 0) return;
  num_bits_ = (expected_keys * kBitsPerKey + 63) / 64 * 64;
  words_.assign(num_bits_ / 64, 0);
}

BloomFilter::BloomFilter(std::uint64_t num_bits, std::uint32_t num_hashes, std::vector<std::uint64_t> words)
    : num_bits_(num_bits), num_hashes_(num_hashes), words_(std::move(words)) {
  if (num_bits_ % 64 != 0 || words_.size() != num_bits_ / 64 || (num_bits_ > 0 && num_hashes_ == 0))
    throw FormatError("bloom filter: inconsistent geometry");
}

void BloomFilter::insert(VertexId key) {
  if (num_bits_ == 0) throw CapacityError("bloom filter sized for zero keys");
  std::uint64_t h1 = mix64(key ^ kSeedA);
  std::uint64_t h2 = mix64(key ^ kSeedB) | 1;
  for (std::uint32_t i = 0; i < num_hashes_; ++i) {
    std::uint64_t bit = (h1 + i * h2) % num_bits_;
    words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
  }
}

bool BloomFilter::may_contain(VertexId key) const {
  if (num_bits_ == 0) return false;
  std::uint64_t h1 = mix64(key ^ kSeedA);
  std::uint64_t h2 = mix64(key ^ kSeedB) | 1;
  for (std::uint32_t i = 0; i < num_hashes_; ++i) {
    std::uint64_t bit = (h1 + i * h2) % num_bits_;
    if ((words_[bit / 64] & (std::uint64_t{1} << (bit % 64))) == 0) return false;
  }
  return true;
}

}  // namespace tilegraph
