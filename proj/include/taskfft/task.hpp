#pragma once

// Minimal futurized task runtime: a fixed pool of worker threads with
// per-worker deques and work stealing, plus shared-state task handles that
// support continuations and joins.
//
// Scheduling rules that the pipelines rely on:
//  - work submitted from outside the pool lands in a shared FIFO queue
//  - work submitted from a worker (e.g. a continuation released by a task
//    that just finished there) is pushed onto that worker's own deque and
//    popped LIFO, so a continuation normally runs next on the same thread
//  - idle workers steal FIFO from other deques
//
// Blocking waits (TaskHandle::wait, wait_all) must not be issued from a
// worker of the pool the awaited tasks run on.

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace taskfft {

class WorkerPool {
 public:
  using Job = std::function<void()>;

  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  [[nodiscard]] std::size_t size() const noexcept { return threads_.size(); }

  /// Jobs must not throw; TaskHandle-based submission wraps them.
  void submit(Job job);

  /// Index of the calling worker in this pool, or -1.
  [[nodiscard]] int current_worker() const noexcept;

 private:
  struct Queue {
    std::mutex mutex;
    std::deque<Job> jobs;
  };

  void worker_loop(std::size_t index);
  bool try_take(std::size_t index, Job& out);

  std::vector<std::unique_ptr<Queue>> local_;
  Queue injection_;
  std::mutex sleep_mutex_;
  std::condition_variable wake_;
  std::atomic<std::size_t> pending_{0};
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

namespace detail {

struct TaskState {
  std::mutex mutex;
  std::condition_variable done_cv;
  bool done = false;
  std::exception_ptr error;
  std::vector<std::function<void()>> on_done;

  void complete(std::exception_ptr e);
  // Runs cb inline when already complete, otherwise when completion happens.
  void add_callback(std::function<void()> cb);
};

}  // namespace detail

/// Shared handle to the completion of one task. Copies refer to the same task.
class TaskHandle {
 public:
  TaskHandle() = default;

  [[nodiscard]] bool valid() const noexcept { return state_ != nullptr; }
  [[nodiscard]] bool ready() const;
  void wait() const;
  /// Waits, then rethrows the task's exception if it failed.
  void get() const;

  /// Schedules `fn` on `pool` once this task completes. If this task failed,
  /// `fn` is skipped and the returned handle carries the same error.
  TaskHandle then(WorkerPool& pool, std::function<void()> fn) const;

  static TaskHandle make_ready();

 private:
  friend TaskHandle async(WorkerPool&, std::function<void()>);
  friend TaskHandle when_all(std::span<const TaskHandle>);
  explicit TaskHandle(std::shared_ptr<detail::TaskState> s) : state_{std::move(s)} {}

  std::shared_ptr<detail::TaskState> state_;
};

TaskHandle async(WorkerPool& pool, std::function<void()> fn);

/// Ready once every input is ready; carries the first error observed.
TaskHandle when_all(std::span<const TaskHandle> handles);

/// Joins every handle, then rethrows the first error (in handle order).
void wait_all(std::span<const TaskHandle> handles);

}  // namespace taskfft
