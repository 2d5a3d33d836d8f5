#pragma once

// Point-to-point message transports between the localities of one world.
//
// A transport delivers messages from each source in the order they were
// sent. send() never waits for the receiver; receive(source) blocks until
// the next message from that source arrives.

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "taskfft/wire.hpp"

namespace taskfft {

class Transport {
 public:
  virtual ~Transport() = default;

  [[nodiscard]] virtual std::size_t rank() const noexcept = 0;
  [[nodiscard]] virtual std::size_t size() const noexcept = 0;

  /// Sends to another rank. Self-sends are rejected.
  void send(std::size_t dest, WireMessage message);
  [[nodiscard]] virtual WireMessage receive(std::size_t source) = 0;

  /// Payload bytes handed to the wire, per collective kind.
  [[nodiscard]] std::uint64_t payload_bytes_sent(CollectiveKind k) const noexcept {
    return sent_[static_cast<std::size_t>(k)].load(std::memory_order_relaxed);
  }
  [[nodiscard]] std::uint64_t messages_sent() const noexcept { return messages_.load(); }

 protected:
  virtual void do_send(std::size_t dest, WireMessage message) = 0;

 private:
  std::array<std::atomic<std::uint64_t>, 4> sent_{};
  std::atomic<std::uint64_t> messages_{0};
};

/// Localities as threads of one process. Every ordered (source, dest) pair
/// has its own queue; sending moves the buffer into it.
class InProcessHub {
 public:
  explicit InProcessHub(std::size_t n_locs);
  ~InProcessHub();

  InProcessHub(const InProcessHub&) = delete;
  InProcessHub& operator=(const InProcessHub&) = delete;

  [[nodiscard]] std::size_t size() const noexcept;
  /// The transport of one rank. Each rank may be claimed once.
  [[nodiscard]] std::unique_ptr<Transport> endpoint(std::size_t rank);

  /// Wakes every blocked receive with a CommunicationError carrying `reason`.
  void abort(const std::string& reason);

  struct State;

 private:
  std::shared_ptr<State> state_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

std::string to_string(const Endpoint& e);
/// Parses "host:port". Throws ConfigurationError.
[[nodiscard]] Endpoint parse_endpoint(std::string_view text);
/// Parses a comma-separated list of "host:port".
[[nodiscard]] std::vector<Endpoint> parse_endpoints(std::string_view text);

/// A bound, listening TCP socket.
class TcpListener {
 public:
  /// Port 0 picks a free port.
  explicit TcpListener(const Endpoint& at);
  ~TcpListener();
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }
  /// Releases the socket to the caller.
  [[nodiscard]] int release() noexcept;

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Joins a TCP world as `rank`. Connections are made in ascending rank
/// order: each rank accepts from every higher rank and connects to every
/// lower one, retrying refused connects until `timeout` so that processes
/// may start in any order.
[[nodiscard]] std::unique_ptr<Transport> connect_tcp_world(
    std::size_t rank, const std::vector<Endpoint>& peers, TcpListener listener,
    std::chrono::milliseconds timeout = std::chrono::seconds{30});
[[nodiscard]] std::unique_ptr<Transport> connect_tcp_world(
    std::size_t rank, const std::vector<Endpoint>& peers,
    std::chrono::milliseconds timeout = std::chrono::seconds{30});

}  // namespace taskfft
