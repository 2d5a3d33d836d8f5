#pragma once

// Runs a function on every rank of a small world, one thread per rank.

#include <exception>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "taskfft/communicator.hpp"
#include "taskfft/transport.hpp"

namespace taskfft::testing {

/// Per-rank outcome: the error each rank raised, if any.
using RankErrors = std::vector<std::exception_ptr>;

inline RankErrors run_world(std::vector<std::unique_ptr<Transport>> transports,
                            const std::function<void(Communicator&)>& fn,
                            InProcessHub* hub = nullptr) {
  const std::size_t n = transports.size();
  RankErrors errors(n);
  std::vector<std::thread> threads;
  for (std::size_t r = 0; r < n; ++r) {
    threads.emplace_back([&, r] {
      try {
        Communicator comm{*transports[r]};
        fn(comm);
      } catch (...) {
        errors[r] = std::current_exception();
        if (hub) hub->abort("rank " + std::to_string(r) + " failed");
      }
    });
  }
  for (auto& t : threads) t.join();
  return errors;
}

inline RankErrors run_inprocess(std::size_t n, const std::function<void(Communicator&)>& fn) {
  InProcessHub hub{n};
  std::vector<std::unique_ptr<Transport>> ts;
  for (std::size_t r = 0; r < n; ++r) ts.push_back(hub.endpoint(r));
  return run_world(std::move(ts), fn, &hub);
}

/// Loopback TCP world; connections are set up concurrently on each rank's thread.
inline RankErrors run_tcp(std::size_t n, const std::function<void(Communicator&)>& fn) {
  std::vector<TcpListener> listeners;
  std::vector<Endpoint> peers;
  for (std::size_t r = 0; r < n; ++r) {
    listeners.emplace_back(Endpoint{"127.0.0.1", 0});
    peers.push_back(Endpoint{"127.0.0.1", listeners.back().port()});
  }
  RankErrors errors(n);
  std::vector<std::thread> threads;
  for (std::size_t r = 0; r < n; ++r) {
    threads.emplace_back([&, r] {
      try {
        auto t = connect_tcp_world(r, peers, std::move(listeners[r]), std::chrono::seconds{10});
        Communicator comm{*t};
        fn(comm);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  return errors;
}

inline bool all_ok(const RankErrors& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return true;
}

}  // namespace taskfft::testing
