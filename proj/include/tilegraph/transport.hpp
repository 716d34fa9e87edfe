#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tilegraph/byte_io.hpp"

namespace tilegraph {

struct Incoming {
  enum class Kind { frame, peer_closed, shut_down };
  Kind kind = Kind::frame;
  std::uint16_t origin = 0;
  Bytes frame;
};

/// Point-to-point frame delivery between the N servers of a run. Frames
/// from one origin to one destination arrive in send order.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::uint16_t rank() const = 0;
  virtual std::uint16_t size() const = 0;
  /// Thread-safe.
  virtual void send(std::uint16_t dest, std::span<const std::uint8_t> frame) = 0;
  /// nullopt on timeout.
  virtual std::optional<Incoming> receive(std::chrono::milliseconds timeout) = 0;
  /// Graceful end of this endpoint: peers see it closed after everything
  /// already sent, and the local receive() yields shut_down.
  virtual void shutdown() = 0;
  /// Failure path: peers observe this endpoint as disconnected right away.
  virtual void abort() noexcept = 0;
};

/// Blocking FIFO shared by the transports.
class Mailbox {
 public:
  void push(Incoming in);
  std::optional<Incoming> pop(std::chrono::milliseconds timeout);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Incoming> queue_;
};

/// In-process transport: N endpoints exchanging frames through mailboxes.
class LocalHub {
 public:
  explicit LocalHub(std::uint16_t size);
  std::uint16_t size() const noexcept { return static_cast<std::uint16_t>(boxes_.size()); }
  /// Endpoint for `rank`; the hub must outlive it.
  std::unique_ptr<Transport> endpoint(std::uint16_t rank);

 private:
  friend class LocalTransport;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
};

/// "host:port".
struct PeerAddress {
  std::string host;
  std::uint16_t port = 0;
  static PeerAddress parse(const std::string& text);
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// Full-mesh TCP transport. Rank j listens on addresses[j], dials every lower
/// rank and accepts every higher rank. Frames travel as u32 length + bytes.
class TcpTransport final : public Transport {
 public:
  static std::unique_ptr<TcpTransport> connect(std::uint16_t rank, const std::vector<PeerAddress>& addresses,
                                               std::chrono::milliseconds connect_timeout = std::chrono::seconds(30));
  ~TcpTransport() override;

  std::uint16_t rank() const override { return rank_; }
  std::uint16_t size() const override { return size_; }
  void send(std::uint16_t dest, std::span<const std::uint8_t> frame) override;
  std::optional<Incoming> receive(std::chrono::milliseconds timeout) override;
  void shutdown() override;
  void abort() noexcept override;

  /// Maximum accepted frame length.
  static constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

 private:
  struct Peer {
    int fd = -1;
    std::mutex send_mu;
    std::thread reader;
  };
  TcpTransport(std::uint16_t rank, std::uint16_t size);
  void start_readers();
  void read_loop(std::uint16_t peer);

  std::uint16_t rank_;
  std::uint16_t size_;
  std::vector<std::unique_ptr<Peer>> peers_;
  Mailbox inbox_;
  std::mutex state_mu_;
  std::condition_variable readers_cv_;
  unsigned readers_running_ = 0;
  bool shut_ = false;
};

/// Listening socket on an ephemeral localhost port, for tests and launch
/// scripts that need free ports. Returns the port number.
std::uint16_t pick_free_port();

}  // namespace tilegraph
