#include "taskfft/transport.hpp"

#include <charconv>
#include <condition_variable>
#include <deque>
#include <mutex>

#include "taskfft/error.hpp"

namespace taskfft {

void Transport::send(std::size_t dest, WireMessage message) {
  if (dest >= size() || dest == rank()) {
    throw CommunicationError("rank " + std::to_string(rank()) + " cannot send to rank " +
                             std::to_string(dest));
  }
  const auto bytes = message.payload.size() * wire_sample_size;
  sent_[static_cast<std::size_t>(message.tag.kind)].fetch_add(bytes, std::memory_order_relaxed);
  messages_.fetch_add(1, std::memory_order_relaxed);
  do_send(dest, std::move(message));
}

struct InProcessHub::State {
  struct Queue {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<WireMessage> messages;
  };

  explicit State(std::size_t n) : n_locs{n}, claimed(n, false) {
    queues.reserve(n * n);
    for (std::size_t i = 0; i < n * n; ++i) queues.push_back(std::make_unique<Queue>());
  }

  Queue& queue(std::size_t source, std::size_t dest) { return *queues[source * n_locs + dest]; }

  std::size_t n_locs;
  std::vector<std::unique_ptr<Queue>> queues;
  std::mutex abort_mutex;
  std::atomic<bool> aborted{false};
  std::string abort_reason;
  std::mutex claim_mutex;
  std::vector<bool> claimed;
};

namespace {

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(std::shared_ptr<InProcessHub::State> state, std::size_t rank)
      : state_{std::move(state)}, rank_{rank} {}

  std::size_t rank() const noexcept override { return rank_; }
  std::size_t size() const noexcept override { return state_->n_locs; }

  WireMessage receive(std::size_t source) override {
    if (source >= size() || source == rank_) {
      throw CommunicationError("rank " + std::to_string(rank_) + " cannot receive from rank " +
                               std::to_string(source));
    }
    auto& q = state_->queue(source, rank_);
    std::unique_lock lock{q.mutex};
    q.cv.wait(lock, [&] { return !q.messages.empty() || state_->aborted.load(); });
    if (q.messages.empty()) throw_aborted(source);
    WireMessage m = std::move(q.messages.front());
    q.messages.pop_front();
    return m;
  }

 protected:
  void do_send(std::size_t dest, WireMessage message) override {
    if (state_->aborted.load()) throw_aborted(dest);
    auto& q = state_->queue(rank_, dest);
    {
      std::lock_guard lock{q.mutex};
      q.messages.push_back(std::move(message));
    }
    q.cv.notify_one();
  }

 private:
  [[noreturn]] void throw_aborted(std::size_t peer) const {
    std::lock_guard lock{state_->abort_mutex};
    throw CommunicationError("rank " + std::to_string(rank_) + ": world aborted while talking to rank " +
                             std::to_string(peer) + ": " + state_->abort_reason);
  }

  std::shared_ptr<InProcessHub::State> state_;
  std::size_t rank_;
};

}  // namespace

InProcessHub::InProcessHub(std::size_t n_locs) {
  if (n_locs == 0) throw ConfigurationError("a world needs at least one locality");
  state_ = std::make_shared<State>(n_locs);
}

InProcessHub::~InProcessHub() = default;

std::size_t InProcessHub::size() const noexcept { return state_->n_locs; }

std::unique_ptr<Transport> InProcessHub::endpoint(std::size_t rank) {
  std::lock_guard lock{state_->claim_mutex};
  if (rank >= state_->n_locs) {
    throw ConfigurationError("rank " + std::to_string(rank) + " outside a world of " +
                             std::to_string(state_->n_locs));
  }
  if (state_->claimed[rank]) {
    throw ConfigurationError("rank " + std::to_string(rank) + " already has a transport");
  }
  state_->claimed[rank] = true;
  return std::make_unique<InProcessTransport>(state_, rank);
}

void InProcessHub::abort(const std::string& reason) {
  {
    std::lock_guard lock{state_->abort_mutex};
    if (state_->aborted.load()) return;
    state_->abort_reason = reason;
    state_->aborted.store(true);
  }
  for (auto& q : state_->queues) {
    // Taking the lock orders the flag store before any waiter's re-check.
    { std::lock_guard lock{q->mutex}; }
    q->cv.notify_all();
  }
}

std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigurationError("endpoint '" + std::string{text} + "' is not host:port");
  }
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535) {
    throw ConfigurationError("endpoint '" + std::string{text} + "' has a bad port");
  }
  return Endpoint{std::string{text.substr(0, colon)}, static_cast<std::uint16_t>(port)};
}

std::vector<Endpoint> parse_endpoints(std::string_view text) {
  std::vector<Endpoint> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_endpoint(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace taskfft
