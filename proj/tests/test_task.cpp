#include <doctest.h>

#include <atomic>
#include <stdexcept>

#include "taskfft/error.hpp"
#include "taskfft/task.hpp"

using namespace taskfft;

TEST_SUITE("task") {

TEST_CASE("async runs every job and joins") {
  WorkerPool pool{3};
  std::atomic<int> sum{0};
  std::vector<TaskHandle> hs;
  for (int i = 1; i <= 100; ++i) hs.push_back(async(pool, [&sum, i] { sum += i; }));
  wait_all(hs);
  CHECK(sum == 5050);
  CHECK_THROWS_AS(WorkerPool{0}, ConfigurationError);
}

TEST_CASE("continuations run after their predecessor") {
  WorkerPool pool{2};
  std::atomic<int> stage{0};
  int observed = -1;
  auto h = async(pool, [&] { stage = 1; }).then(pool, [&] {
    observed = stage.load();
    stage = 2;
  });
  h.get();
  CHECK(observed == 1);
  CHECK(stage == 2);

  // Continuation attached to an already finished task.
  auto done = async(pool, [] {});
  done.wait();
  bool ran = false;
  done.then(pool, [&] { ran = true; }).get();
  CHECK(ran);
}

TEST_CASE("a continuation released by a worker runs on that worker first") {
  WorkerPool pool{1};
  std::vector<int> order;
  std::mutex m;
  auto log = [&](int v) {
    std::lock_guard lock{m};
    order.push_back(v);
  };
  // Hold the only worker until the whole graph is attached.
  std::atomic<bool> open{false};
  auto gate = async(pool, [&] {
    while (!open.load()) std::this_thread::yield();
  });
  std::vector<TaskHandle> hs;
  for (int i = 0; i < 4; ++i) {
    hs.push_back(async(pool, [&, i] { log(10 * i); }).then(pool, [&, i] { log(10 * i + 1); }));
  }
  open = true;
  gate.get();
  wait_all(hs);
  REQUIRE(order.size() == 8);
  // Single worker: each continuation directly follows its predecessor.
  for (int i = 0; i < 4; ++i) CHECK(order[static_cast<std::size_t>(2 * i + 1)] == order[static_cast<std::size_t>(2 * i)] + 1);
}

TEST_CASE("errors propagate through continuations and joins") {
  WorkerPool pool{2};
  bool skipped_ran = false;
  auto failing = async(pool, [] { throw std::runtime_error{"boom"}; });
  auto next = failing.then(pool, [&] { skipped_ran = true; });
  CHECK_THROWS_WITH(next.get(), "boom");
  CHECK_FALSE(skipped_ran);

  std::vector<TaskHandle> hs{async(pool, [] {}), failing, async(pool, [] {})};
  CHECK_THROWS_WITH(when_all(hs).get(), "boom");
  CHECK_THROWS_WITH(wait_all(hs), "boom");
}

TEST_CASE("when_all of nothing is ready") {
  CHECK(when_all(std::span<const TaskHandle>{}).ready());
}

TEST_CASE("when_all waits for every input") {
  WorkerPool pool{4};
  std::atomic<int> count{0};
  std::vector<TaskHandle> hs;
  for (int i = 0; i < 64; ++i) hs.push_back(async(pool, [&] { ++count; }));
  int seen = -1;
  when_all(hs).then(pool, [&] { seen = count.load(); }).get();
  CHECK(seen == 64);
}

}  // TEST_SUITE
