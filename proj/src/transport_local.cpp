#include "tilegraph/transport.hpp"

#include "tilegraph/errors.hpp"

namespace tilegraph {

void Mailbox::push(Incoming in) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(in));
  }
  cv_.notify_one();
}

std::optional<Incoming> Mailbox::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
  Incoming in = std::move(queue_.front());
  queue_.pop_front();
  return in;
}

class LocalTransport final : public Transport {
 public:
  LocalTransport(LocalHub& hub, std::uint16_t rank) : hub_(hub), rank_(rank) {}

  std::uint16_t rank() const override { return rank_; }
  std::uint16_t size() const override { return hub_.size(); }

  void send(std::uint16_t dest, std::span<const std::uint8_t> frame) override {
    if (dest >= hub_.size() || dest == rank_) throw TransportError("invalid destination " + std::to_string(dest));
    hub_.boxes_[dest]->push(Incoming{Incoming::Kind::frame, rank_, Bytes(frame.begin(), frame.end())});
  }

  std::optional<Incoming> receive(std::chrono::milliseconds timeout) override {
    return hub_.boxes_[rank_]->pop(timeout);
  }

  void shutdown() override { hub_.boxes_[rank_]->push(Incoming{Incoming::Kind::shut_down, rank_, {}}); }

  void abort() noexcept override {
    try {
      for (std::uint16_t r = 0; r < hub_.size(); ++r)
        if (r != rank_) hub_.boxes_[r]->push(Incoming{Incoming::Kind::peer_closed, rank_, {}});
    } catch (...) {
    }
  }

 private:
  LocalHub& hub_;
  std::uint16_t rank_;
};

LocalHub::LocalHub(std::uint16_t size) {
  if (size == 0) throw DomainError("a local hub needs at least one endpoint");
  for (std::uint16_t i = 0; i < size; ++i) boxes_.push_back(std::make_unique<Mailbox>());
}

std::unique_ptr<Transport> LocalHub::endpoint(std::uint16_t rank) {
  if (rank >= size()) throw DomainError("rank " + std::to_string(rank) + " outside the hub");
  return std::make_unique<LocalTransport>(*this, rank);
}

}  // namespace tilegraph
