#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "tilegraph/dataset.hpp"
#include "tilegraph/transport.hpp"
#include "tilegraph/update_message.hpp"
#include "tilegraph/vertex_state.hpp"

namespace tilegraph {

struct CommConfig {
  SparsityPolicy policy;
  WireCodec codec = WireCodec::fast;
  std::chrono::milliseconds barrier_timeout{60000};
};

/// Broadcast side of one server. A single receiver thread stages remote
/// updates into the next-superstep slots; frames that arrive early for the
/// following superstep are held back until advance().
class Communicator {
 public:
  Communicator(Transport& transport, CommConfig config, VertexStateArrays& states);
  ~Communicator();
  Communicator(const Communicator&) = delete;
  Communicator& operator=(const Communicator&) = delete;

  void start(std::uint32_t first_superstep);
  /// Sends one tile's batch to every peer. Thread-safe. Local staging is the
  /// caller's job (loopback never touches the wire).
  void broadcast(const UpdateBatch& batch, const TileDescriptor& tile);
  /// Exchanges per-server owned update counts; returns once every peer's
  /// marker for the current superstep arrived, which (FIFO per origin) means
  /// all of its update frames were applied. Returns the global sum.
  std::uint64_t barrier(std::uint64_t local_count);
  /// Moves to the next superstep and applies frames held back for it.
  void advance();
  /// Graceful shutdown after the final barrier.
  void stop();
  /// Failure path: wakes peers blocked on us.
  void abort() noexcept;

  std::uint32_t superstep() const;
  std::uint64_t bytes_sent() const noexcept { return bytes_sent_.load(); }
  std::uint64_t frames_sent() const noexcept { return frames_sent_.load(); }
  std::uint64_t updates_received() const noexcept { return updates_received_.load(); }

 private:
  void receive_loop();
  void handle_frame_locked(std::uint16_t origin, const Bytes& frame);
  void send_to_peers(std::span<const std::uint8_t> frame);

  Transport& transport_;
  CommConfig config_;
  VertexStateArrays& states_;
  std::uint16_t peers_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::uint32_t current_ = 0;
  std::vector<bool> barrier_seen_;
  std::vector<bool> closed_;
  std::uint32_t arrivals_ = 0;
  std::uint64_t remote_sum_ = 0;
  std::vector<std::pair<std::uint16_t, Bytes>> held_;
  std::exception_ptr failure_;

  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> bytes_sent_{0};
  std::atomic<std::uint64_t> frames_sent_{0};
  std::atomic<std::uint64_t> updates_received_{0};
  std::thread receiver_;
};

}  // namespace tilegraph
