#include "tilegraph/communicator.hpp"

#include <sstream>

#include "tilegraph/errors.hpp"

namespace tilegraph {

Communicator::Communicator(Transport& transport, CommConfig config, VertexStateArrays& states)
    : transport_(transport),
      config_(config),
      states_(states),
      peers_(transport.size()),
      barrier_seen_(transport.size(), false),
      closed_(transport.size(), false) {}

Communicator::~Communicator() {
  if (receiver_.joinable()) {
    stopping_ = true;
    receiver_.join();
  }
}

void Communicator::start(std::uint32_t first_superstep) {
  {
    std::lock_guard lock(mu_);
    current_ = first_superstep;
  }
  if (peers_ > 1) receiver_ = std::thread([this] { receive_loop(); });
}

std::uint32_t Communicator::superstep() const {
  std::lock_guard lock(mu_);
  return current_;
}

void Communicator::send_to_peers(std::span<const std::uint8_t> frame) {
  for (std::uint16_t p = 0; p < peers_; ++p) {
    if (p == transport_.rank()) continue;
    transport_.send(p, frame);
    bytes_sent_.fetch_add(frame.size(), std::memory_order_relaxed);
    frames_sent_.fetch_add(1, std::memory_order_relaxed);
  }
}

void Communicator::broadcast(const UpdateBatch& batch, const TileDescriptor& tile) {
  if (peers_ <= 1 || batch.updates.empty()) return;
  auto step = superstep();
  auto frame = serialize_frame(encode_updates(batch, tile, config_.policy, config_.codec, step, transport_.rank()));
  send_to_peers(frame);
}

std::uint64_t Communicator::barrier(std::uint64_t local_count) {
  if (peers_ <= 1) return local_count;
  auto step = superstep();
  send_to_peers(serialize_frame(make_barrier_message(step, transport_.rank(), local_count)));

  std::unique_lock lock(mu_);
  auto missing_peer_closed = [&] {
    for (std::uint16_t p = 0; p < peers_; ++p)
      if (p != transport_.rank() && closed_[p] && !barrier_seen_[p]) return true;
    return false;
  };
  bool done = cv_.wait_for(lock, config_.barrier_timeout, [&] {
    return failure_ || arrivals_ + 1 == peers_ || missing_peer_closed();
  });
  if (failure_) std::rethrow_exception(failure_);
  if (!done || arrivals_ + 1 != peers_) {
    std::ostringstream os;
    os << (done ? "peer disconnected" : "barrier timed out") << " in superstep " << step << "; peers:";
    for (std::uint16_t p = 0; p < peers_; ++p) {
      if (p == transport_.rank()) continue;
      os << ' ' << p << '=' << (barrier_seen_[p] ? "arrived" : closed_[p] ? "disconnected" : "waiting");
    }
    throw TransportError(os.str());
  }
  return local_count + remote_sum_;
}

void Communicator::advance() {
  std::lock_guard lock(mu_);
  ++current_;
  std::fill(barrier_seen_.begin(), barrier_seen_.end(), false);
  arrivals_ = 0;
  remote_sum_ = 0;
  auto held = std::move(held_);
  held_.clear();
  try {
    for (const auto& [origin, frame] : held) handle_frame_locked(origin, frame);
  } catch (...) {
    failure_ = std::current_exception();
    cv_.notify_all();
    throw;
  }
}

void Communicator::stop() {
  if (peers_ > 1) transport_.shutdown();
  if (receiver_.joinable()) {
    stopping_ = true;
    receiver_.join();
  }
}

void Communicator::abort() noexcept {
  transport_.abort();
  stopping_ = true;
}

void Communicator::receive_loop() {
  while (!stopping_) {
    auto in = transport_.receive(std::chrono::milliseconds(50));
    if (!in) continue;
    if (in->kind == Incoming::Kind::shut_down) break;
    std::lock_guard lock(mu_);
    if (in->kind == Incoming::Kind::peer_closed) {
      if (in->origin < peers_) closed_[in->origin] = true;
      cv_.notify_all();
      continue;
    }
    try {
      handle_frame_locked(in->origin, in->frame);
    } catch (...) {
      if (!failure_) failure_ = std::current_exception();
    }
    cv_.notify_all();
  }
}

void Communicator::handle_frame_locked(std::uint16_t origin, const Bytes& frame) {
  auto header = peek_frame_header(frame);
  if (header.origin != origin || origin >= peers_)
    throw ProtocolError("frame origin " + std::to_string(header.origin) + " arrived on link " + std::to_string(origin));
  if (header.superstep == current_ + 1 && barrier_seen_[origin]) {
    held_.emplace_back(origin, frame);
    return;
  }
  if (header.superstep != current_)
    throw ProtocolError("rank " + std::to_string(origin) + " sent superstep " + std::to_string(header.superstep) +
                        " during superstep " + std::to_string(current_));
  if (barrier_seen_[origin]) throw ProtocolError("frame after barrier from rank " + std::to_string(origin));

  auto msg = parse_frame(frame);
  if (msg.kind == FrameKind::barrier) {
    barrier_seen_[origin] = true;
    ++arrivals_;
    remote_sum_ += barrier_count(msg);
    return;
  }
  updates_received_.fetch_add(decode_and_apply(msg, states_, current_), std::memory_order_relaxed);
}

}  // namespace tilegraph
