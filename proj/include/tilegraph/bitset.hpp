#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <memory>

namespace tilegraph {

/// Fixed-size bitset whose set() is safe to call concurrently from several
/// threads on distinct bits (bits may share a word).
class ConcurrentBitset {
 public:
  ConcurrentBitset() = default;
  explicit ConcurrentBitset(std::size_t size)
      : size_(size), words_(std::make_unique<std::atomic<std::uint64_t>[]>(word_count())) {
    clear_all();
  }

  std::size_t size() const noexcept { return size_; }

  void set(std::size_t i) noexcept {
    words_[i / 64].fetch_or(std::uint64_t{1} << (i % 64), std::memory_order_relaxed);
  }
  bool test(std::size_t i) const noexcept {
    return (words_[i / 64].load(std::memory_order_relaxed) >> (i % 64)) & 1;
  }
  std::uint64_t word(std::size_t w) const noexcept { return words_[w].load(std::memory_order_relaxed); }
  std::size_t word_count() const noexcept { return (size_ + 63) / 64; }

  void clear_all() noexcept {
    for (std::size_t w = 0; w < word_count(); ++w) words_[w].store(0, std::memory_order_relaxed);
  }
  void set_all() noexcept {
    for (std::size_t w = 0; w < word_count(); ++w) words_[w].store(~std::uint64_t{0}, std::memory_order_relaxed);
    if (size_ % 64 != 0 && word_count() > 0)
      words_[word_count() - 1].store((std::uint64_t{1} << (size_ % 64)) - 1, std::memory_order_relaxed);
  }
  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (std::size_t w = 0; w < word_count(); ++w) n += static_cast<std::size_t>(std::popcount(word(w)));
    return n;
  }

  void swap(ConcurrentBitset& other) noexcept {
    std::swap(size_, other.size_);
    std::swap(words_, other.words_);
  }

 private:
  std::size_t size_ = 0;
  std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
};

}  // namespace tilegraph
