#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "tilegraph/errors.hpp"
#include "tilegraph/transport.hpp"

namespace tilegraph {
namespace {

using Clock = std::chrono::steady_clock;
constexpr char kHello[] = "GHH1";

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset(std::exchange(o.fd_, -1));
    return *this;
  }
  ~Fd() { reset(); }
  int get() const noexcept { return fd_; }
  int release() noexcept { return std::exchange(fd_, -1); }
  void reset(int fd = -1) noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_;
};

sockaddr_storage resolve(const PeerAddress& addr, socklen_t& len) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  auto port = std::to_string(addr.port);
  int rc = ::getaddrinfo(addr.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0 || !res) throw TransportError("cannot resolve " + addr.to_string() + ": " + ::gai_strerror(rc));
  sockaddr_storage out{};
  std::memcpy(&out, res->ai_addr, res->ai_addrlen);
  len = res->ai_addrlen;
  ::freeaddrinfo(res);
  return out;
}

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    auto sent = ::send(fd, data, n, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("send"));
    }
    data += sent;
    n -= static_cast<std::size_t>(sent);
  }
}

/// false on orderly EOF before the first byte.
bool read_all(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    auto r = ::recv(fd, data + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw TransportError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("recv"));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Bytes hello(std::uint16_t rank, std::uint16_t size) {
  ByteWriter w;
  w.put_tag(kHello);
  w.put_u16(rank);
  w.put_u16(size);
  return std::move(w).take();
}

}  // namespace

PeerAddress PeerAddress::parse(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw DomainError("address must be host:port (got '" + text + "')");
  PeerAddress a;
  a.host = text.substr(0, colon);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw DomainError("invalid port in '" + text + "'");
  }
  if (port == 0 || port > 65535) throw DomainError("port out of range in '" + text + "'");
  a.port = static_cast<std::uint16_t>(port);
  return a;
}

TcpTransport::TcpTransport(std::uint16_t rank, std::uint16_t size) : rank_(rank), size_(size) {
  for (std::uint16_t i = 0; i < size; ++i) peers_.push_back(std::make_unique<Peer>());
}

std::unique_ptr<TcpTransport> TcpTransport::connect(std::uint16_t rank, const std::vector<PeerAddress>& addresses,
                                                    std::chrono::milliseconds connect_timeout) {
  if (addresses.empty() || addresses.size() > 65535) throw DomainError("need between 1 and 65535 addresses");
  auto size = static_cast<std::uint16_t>(addresses.size());
  if (rank >= size) throw DomainError("rank " + std::to_string(rank) + " outside [0, " + std::to_string(size) + ")");
  std::unique_ptr<TcpTransport> t(new TcpTransport(rank, size));
  const auto deadline = Clock::now() + connect_timeout;

  Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.get() < 0) throw TransportError(sys_error("socket"));
  int one = 1;
  ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  socklen_t len = 0;
  auto self = resolve(addresses[rank], len);
  if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&self), len) < 0)
    throw TransportError(sys_error("bind " + addresses[rank].to_string()));
  if (::listen(listener.get(), size) < 0) throw TransportError(sys_error("listen"));

  // Dial lower ranks; their listeners may not be up yet, so retry.
  for (std::uint16_t peer = 0; peer < rank; ++peer) {
    socklen_t plen = 0;
    auto target = resolve(addresses[peer], plen);
    for (;;) {
      Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
      if (fd.get() < 0) throw TransportError(sys_error("socket"));
      if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&target), plen) == 0) {
        set_nodelay(fd.get());
        auto h = hello(rank, size);
        write_all(fd.get(), h.data(), h.size());
        t->peers_[peer]->fd = fd.release();
        break;
      }
      if (Clock::now() >= deadline)
        throw TransportError(sys_error("connect to rank " + std::to_string(peer) + " at " + addresses[peer].to_string()));
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }

  // Accept higher ranks.
  for (std::uint16_t accepted = 0; accepted + rank + 1 < size;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    pollfd p{listener.get(), POLLIN, 0};
    int rc = ::poll(&p, 1, static_cast<int>(std::max<long long>(left, 0)));
    if (rc == 0) throw TransportError("timed out waiting for higher ranks to connect");
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("poll"));
    }
    Fd fd(::accept(listener.get(), nullptr, nullptr));
    if (fd.get() < 0) throw TransportError(sys_error("accept"));
    set_nodelay(fd.get());
    std::uint8_t buf[8];
    if (!read_all(fd.get(), buf, sizeof buf)) throw TransportError("peer closed during handshake");
    ByteReader r(buf);
    if (!r.peek_tag(kHello)) throw TransportError("bad handshake magic");
    r.skip(4);
    auto peer = r.get_u16();
    auto peer_size = r.get_u16();
    if (peer_size != size) throw TransportError("peer reports cluster size " + std::to_string(peer_size));
    if (peer <= rank || peer >= size || t->peers_[peer]->fd >= 0)
      throw TransportError("unexpected handshake from rank " + std::to_string(peer));
    t->peers_[peer]->fd = fd.release();
    ++accepted;
  }
  t->start_readers();
  return t;
}

void TcpTransport::start_readers() {
  for (std::uint16_t p = 0; p < size_; ++p) {
    if (p == rank_) continue;
    {
      std::lock_guard lock(state_mu_);
      ++readers_running_;
    }
    peers_[p]->reader = std::thread([this, p] { read_loop(p); });
  }
}

void TcpTransport::read_loop(std::uint16_t peer) {
  int fd = peers_[peer]->fd;
  try {
    for (;;) {
      std::uint8_t len_buf[4];
      if (!read_all(fd, len_buf, 4)) break;
      ByteReader r(len_buf);
      auto len = r.get_u32();
      if (len > kMaxFrameBytes) throw TransportError("oversized frame");
      Bytes frame(len);
      if (len > 0 && !read_all(fd, frame.data(), len)) throw TransportError("connection closed mid-frame");
      inbox_.push(Incoming{Incoming::Kind::frame, peer, std::move(frame)});
    }
  } catch (const std::exception&) {
  }
  inbox_.push(Incoming{Incoming::Kind::peer_closed, peer, {}});
  {
    std::lock_guard lock(state_mu_);
    --readers_running_;
  }
  readers_cv_.notify_all();
}

void TcpTransport::send(std::uint16_t dest, std::span<const std::uint8_t> frame) {
  if (dest >= size_ || dest == rank_) throw TransportError("invalid destination " + std::to_string(dest));
  if (frame.size() > kMaxFrameBytes) throw CapacityError("frame exceeds transport limit");
  auto& peer = *peers_[dest];
  std::uint8_t len[4];
  for (int i = 0; i < 4; ++i) len[i] = static_cast<std::uint8_t>(frame.size() >> (8 * i));
  std::lock_guard lock(peer.send_mu);
  if (peer.fd < 0) throw TransportError("no connection to rank " + std::to_string(dest));
  write_all(peer.fd, len, 4);
  write_all(peer.fd, frame.data(), frame.size());
}

std::optional<Incoming> TcpTransport::receive(std::chrono::milliseconds timeout) { return inbox_.pop(timeout); }

void TcpTransport::shutdown() {
  {
    std::lock_guard lock(state_mu_);
    if (shut_) return;
    shut_ = true;
  }
  for (std::uint16_t p = 0; p < size_; ++p) {
    if (p == rank_) continue;
    std::lock_guard lock(peers_[p]->send_mu);
    if (peers_[p]->fd >= 0) ::shutdown(peers_[p]->fd, SHUT_WR);
  }
  inbox_.push(Incoming{Incoming::Kind::shut_down, rank_, {}});
}

void TcpTransport::abort() noexcept {
  for (std::uint16_t p = 0; p < size_; ++p)
    if (p != rank_ && peers_[p]->fd >= 0) ::shutdown(peers_[p]->fd, SHUT_RDWR);
}

TcpTransport::~TcpTransport() {
  try {
    shutdown();
  } catch (...) {
  }
  {
    // Let peers finish and close their side before tearing down.
    std::unique_lock lock(state_mu_);
    readers_cv_.wait_for(lock, std::chrono::seconds(10), [&] { return readers_running_ == 0; });
  }
  abort();
  for (auto& p : peers_) {
    if (p->reader.joinable()) p->reader.join();
    if (p->fd >= 0) ::close(p->fd);
  }
}

std::uint16_t pick_free_port() {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (fd.get() < 0) throw TransportError(sys_error("socket"));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) throw TransportError(sys_error("bind"));
  socklen_t len = sizeof addr;
  if (::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len) < 0)
    throw TransportError(sys_error("getsockname"));
  return ntohs(addr.sin_port);
}

}  // namespace tilegraph
