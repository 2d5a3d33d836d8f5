#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "taskfft/error.hpp"
#include "taskfft/transport.hpp"

namespace taskfft {

namespace {

using SteadyClock = std::chrono::steady_clock;

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const Endpoint& e) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const int rc = ::getaddrinfo(e.host.c_str(), nullptr, &hints, &found);
  if (rc != 0 || found == nullptr) {
    throw CommunicationError("cannot resolve " + to_string(e) + ": " + ::gai_strerror(rc));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, found->ai_addr, sizeof(addr));
  ::freeaddrinfo(found);
  addr.sin_port = htons(e.port);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

// False when the peer closed the connection before any byte arrived.
bool read_exact(int fd, std::byte* out, std::size_t n, const std::string& who) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t got = ::recv(fd, out + done, n - done, 0);
    if (got == 0) {
      if (done == 0) return false;
      throw CommunicationError(who + ": connection closed mid-message");
    }
    if (got < 0) {
      if (errno == EINTR) continue;
      throw CommunicationError(who + ": receive failed: " + errno_text());
    }
    done += static_cast<std::size_t>(got);
  }
  return true;
}

void write_exact(int fd, const std::byte* in, std::size_t n, const std::string& who) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t put = ::send(fd, in + done, n - done, MSG_NOSIGNAL);
    if (put < 0) {
      if (errno == EINTR) continue;
      throw CommunicationError(who + ": send failed: " + errno_text());
    }
    done += static_cast<std::size_t>(put);
  }
}

std::array<std::byte, 8> hello(std::size_t rank, std::size_t n) {
  std::array<std::byte, 8> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = static_cast<std::byte>((rank >> (8 * i)) & 0xffu);
    out[4 + i] = static_cast<std::byte>((n >> (8 * i)) & 0xffu);
  }
  return out;
}

std::pair<std::size_t, std::size_t> parse_hello(const std::array<std::byte, 8>& h) {
  std::size_t rank = 0;
  std::size_t n = 0;
  for (std::size_t i = 4; i-- > 0;) {
    rank = (rank << 8) | std::to_integer<std::size_t>(h[i]);
    n = (n << 8) | std::to_integer<std::size_t>(h[4 + i]);
  }
  return {rank, n};
}

class TcpTransport final : public Transport {
 public:
  struct Peer {
    int fd = -1;
    Endpoint endpoint;
    std::thread sender;
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::vector<std::byte>> outbox;
    bool closing = false;
    std::exception_ptr error;
  };

  TcpTransport(std::size_t rank, const std::vector<Endpoint>& peers, std::vector<int> fds)
      : rank_{rank}, peers_(peers.size()) {
    for (std::size_t s = 0; s < peers.size(); ++s) {
      peers_[s] = std::make_unique<Peer>();
      peers_[s]->endpoint = peers[s];
      peers_[s]->fd = fds[s];
    }
    for (std::size_t s = 0; s < peers_.size(); ++s) {
      if (s == rank_) continue;
      peers_[s]->sender = std::thread{[this, s] { sender_loop(s); }};
    }
  }

  ~TcpTransport() override {
    for (auto& p : peers_) {
      {
        std::lock_guard lock{p->mutex};
        p->closing = true;
      }
      p->cv.notify_all();
    }
    for (auto& p : peers_) {
      if (p->sender.joinable()) p->sender.join();
    }
    for (auto& p : peers_) {
      if (p->fd >= 0) {
        ::shutdown(p->fd, SHUT_RDWR);
        ::close(p->fd);
      }
    }
  }

  std::size_t rank() const noexcept override { return rank_; }
  std::size_t size() const noexcept override { return peers_.size(); }

  WireMessage receive(std::size_t source) override {
    if (source >= size() || source == rank_) {
      throw CommunicationError("rank " + std::to_string(rank_) + " cannot receive from rank " +
                               std::to_string(source));
    }
    Peer& p = *peers_[source];
    const std::string who = describe(source);
    std::array<std::byte, wire_header_size> head{};
    if (!read_exact(p.fd, head.data(), head.size(), who)) {
      throw CommunicationError(who + ": peer disconnected");
    }
    const WireHeader h = decode_header(head);
    if (h.source != source) {
      throw ProtocolError(who + ": frame claims source rank " + std::to_string(h.source));
    }
    std::vector<std::byte> body(h.payload_bytes);
    if (!body.empty() && !read_exact(p.fd, body.data(), body.size(), who)) {
      throw CommunicationError(who + ": peer disconnected");
    }
    WireMessage m;
    m.tag = h.tag;
    m.source = LocalityId{h.source};
    m.payload.resize(h.payload_bytes / wire_sample_size);
    decode_payload(body, m.payload);
    return m;
  }

 protected:
  void do_send(std::size_t dest, WireMessage message) override {
    auto frame = encode(message);
    Peer& p = *peers_[dest];
    {
      std::lock_guard lock{p.mutex};
      if (p.error) std::rethrow_exception(p.error);
      p.outbox.push_back(std::move(frame));
    }
    p.cv.notify_one();
  }

 private:
  std::string describe(std::size_t peer) const {
    return "rank " + std::to_string(rank_) + " <-> rank " + std::to_string(peer) + " (" +
           to_string(peers_[peer]->endpoint) + ")";
  }

  void sender_loop(std::size_t dest) {
    Peer& p = *peers_[dest];
    const std::string who = describe(dest);
    for (;;) {
      std::vector<std::byte> frame;
      {
        std::unique_lock lock{p.mutex};
        p.cv.wait(lock, [&] { return !p.outbox.empty() || p.closing; });
        if (p.outbox.empty()) return;
        frame = std::move(p.outbox.front());
        p.outbox.pop_front();
      }
      try {
        write_exact(p.fd, frame.data(), frame.size(), who);
      } catch (...) {
        std::lock_guard lock{p.mutex};
        p.error = std::current_exception();
        p.outbox.clear();
        return;
      }
    }
  }

  std::size_t rank_;
  std::vector<std::unique_ptr<Peer>> peers_;
};

int connect_with_retry(const Endpoint& e, SteadyClock::time_point deadline, const std::string& who) {
  const sockaddr_in addr = resolve(e);
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw CommunicationError(who + ": socket failed: " + errno_text());
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) return fd;
    const int err = errno;
    ::close(fd);
    if ((err != ECONNREFUSED && err != ECONNRESET && err != ETIMEDOUT) ||
        SteadyClock::now() >= deadline) {
      throw CommunicationError(who + ": connect to " + to_string(e) + " failed: " +
                               std::strerror(err));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds{20});
  }
}

}  // namespace

TcpListener::TcpListener(const Endpoint& at) {
  const sockaddr_in addr = resolve(at);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw CommunicationError("socket failed: " + errno_text());
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 64) != 0) {
    const std::string why = errno_text();
    ::close(fd_);
    fd_ = -1;
    throw CommunicationError("cannot listen on " + to_string(at) + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_{std::exchange(other.fd_, -1)}, port_{other.port_} {}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    port_ = other.port_;
  }
  return *this;
}

int TcpListener::release() noexcept { return std::exchange(fd_, -1); }

std::unique_ptr<Transport> connect_tcp_world(std::size_t rank, const std::vector<Endpoint>& peers,
                                             TcpListener listener,
                                             std::chrono::milliseconds timeout) {
  const std::size_t n = peers.size();
  if (rank >= n) {
    throw ConfigurationError("rank " + std::to_string(rank) + " has no entry in a peer list of " +
                             std::to_string(n));
  }
  const auto deadline = SteadyClock::now() + timeout;
  const std::string me = "rank " + std::to_string(rank);
  const int listen_fd = listener.release();
  std::vector<int> fds(n, -1);
  auto cleanup = [&] {
    ::close(listen_fd);
    for (int fd : fds) {
      if (fd >= 0) ::close(fd);
    }
  };

  try {
    for (std::size_t s = 0; s < rank; ++s) {
      const int fd = connect_with_retry(peers[s], deadline, me + " -> rank " + std::to_string(s));
      fds[s] = fd;
      set_nodelay(fd);
      const auto h = hello(rank, n);
      write_exact(fd, h.data(), h.size(), me + " -> rank " + std::to_string(s));
    }
    for (std::size_t accepted = 0; accepted + rank + 1 < n; ++accepted) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - SteadyClock::now());
      pollfd pfd{listen_fd, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(std::max<long long>(left.count(), 0)));
      if (ready <= 0) {
        throw CommunicationError(me + ": timed out waiting for " +
                                 std::to_string(n - rank - 1 - accepted) + " higher ranks to connect");
      }
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) throw CommunicationError(me + ": accept failed: " + errno_text());
      set_nodelay(fd);
      std::array<std::byte, 8> h{};
      if (!read_exact(fd, h.data(), h.size(), me + " accepting")) {
        ::close(fd);
        throw CommunicationError(me + ": peer closed before saying hello");
      }
      const auto [peer, world] = parse_hello(h);
      if (world != n || peer <= rank || peer >= n || fds[peer] >= 0) {
        ::close(fd);
        throw ProtocolError(me + ": unexpected hello from rank " + std::to_string(peer) +
                            " of a world of " + std::to_string(world));
      }
      fds[peer] = fd;
    }
  } catch (...) {
    cleanup();
    throw;
  }
  ::close(listen_fd);
  return std::make_unique<TcpTransport>(rank, peers, std::move(fds));
}

std::unique_ptr<Transport> connect_tcp_world(std::size_t rank, const std::vector<Endpoint>& peers,
                                             std::chrono::milliseconds timeout) {
  if (rank >= peers.size()) {
    throw ConfigurationError("rank " + std::to_string(rank) + " has no entry in a peer list of " +
                             std::to_string(peers.size()));
  }
  return connect_tcp_world(rank, peers, TcpListener{peers[rank]}, timeout);
}

}  // namespace taskfft
