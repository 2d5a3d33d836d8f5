#include "taskfft/task.hpp"

#include "taskfft/error.hpp"

namespace taskfft {

namespace {

struct WorkerIdentity {
  const WorkerPool* pool = nullptr;
  int index = -1;
};

thread_local WorkerIdentity this_worker;

}  // namespace

WorkerPool::WorkerPool(std::size_t workers) {
  if (workers == 0) throw ConfigurationError("worker pool needs at least one worker");
  local_.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) local_.push_back(std::make_unique<Queue>());
  threads_.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    threads_.emplace_back([this, i] { worker_loop(i); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock{sleep_mutex_};
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

int WorkerPool::current_worker() const noexcept {
  return this_worker.pool == this ? this_worker.index : -1;
}

void WorkerPool::submit(Job job) {
  const int self = current_worker();
  Queue& q = self >= 0 ? *local_[static_cast<std::size_t>(self)] : injection_;
  {
    std::lock_guard lock{q.mutex};
    q.jobs.push_back(std::move(job));
  }
  pending_.fetch_add(1, std::memory_order_release);
  { std::lock_guard lock{sleep_mutex_}; }
  wake_.notify_one();
}

bool WorkerPool::try_take(std::size_t index, Job& out) {
  {
    Queue& own = *local_[index];
    std::lock_guard lock{own.mutex};
    if (!own.jobs.empty()) {
      out = std::move(own.jobs.back());
      own.jobs.pop_back();
      return true;
    }
  }
  {
    std::lock_guard lock{injection_.mutex};
    if (!injection_.jobs.empty()) {
      out = std::move(injection_.jobs.front());
      injection_.jobs.pop_front();
      return true;
    }
  }
  const std::size_t n = local_.size();
  for (std::size_t k = 1; k < n; ++k) {
    Queue& victim = *local_[(index + k) % n];
    std::lock_guard lock{victim.mutex};
    if (!victim.jobs.empty()) {
      out = std::move(victim.jobs.front());
      victim.jobs.pop_front();
      return true;
    }
  }
  return false;
}

void WorkerPool::worker_loop(std::size_t index) {
  this_worker = {this, static_cast<int>(index)};
  for (;;) {
    Job job;
    if (try_take(index, job)) {
      pending_.fetch_sub(1, std::memory_order_acq_rel);
      job();
      continue;
    }
    std::unique_lock lock{sleep_mutex_};
    wake_.wait(lock, [this] { return stopping_ || pending_.load(std::memory_order_acquire) > 0; });
    if (stopping_ && pending_.load(std::memory_order_acquire) == 0) return;
  }
}

namespace detail {

void TaskState::complete(std::exception_ptr e) {
  std::vector<std::function<void()>> callbacks;
  {
    std::lock_guard lock{mutex};
    done = true;
    error = std::move(e);
    callbacks.swap(on_done);
  }
  done_cv.notify_all();
  for (auto& cb : callbacks) cb();
}

void TaskState::add_callback(std::function<void()> cb) {
  {
    std::lock_guard lock{mutex};
    if (!done) {
      on_done.push_back(std::move(cb));
      return;
    }
  }
  cb();
}

}  // namespace detail

bool TaskHandle::ready() const {
  std::lock_guard lock{state_->mutex};
  return state_->done;
}

void TaskHandle::wait() const {
  std::unique_lock lock{state_->mutex};
  state_->done_cv.wait(lock, [this] { return state_->done; });
}

void TaskHandle::get() const {
  wait();
  if (state_->error) std::rethrow_exception(state_->error);
}

TaskHandle TaskHandle::make_ready() {
  auto s = std::make_shared<detail::TaskState>();
  s->done = true;
  return TaskHandle{std::move(s)};
}

TaskHandle async(WorkerPool& pool, std::function<void()> fn) {
  auto state = std::make_shared<detail::TaskState>();
  pool.submit([state, fn = std::move(fn)] {
    try {
      fn();
      state->complete(nullptr);
    } catch (...) {
      state->complete(std::current_exception());
    }
  });
  return TaskHandle{std::move(state)};
}

TaskHandle TaskHandle::then(WorkerPool& pool, std::function<void()> fn) const {
  auto next = std::make_shared<detail::TaskState>();
  state_->add_callback([&pool, prev = state_, next, fn = std::move(fn)]() mutable {
    // prev->error is immutable once done is set.
    if (prev->error) {
      next->complete(prev->error);
      return;
    }
    pool.submit([next, fn = std::move(fn)] {
      try {
        fn();
        next->complete(nullptr);
      } catch (...) {
        next->complete(std::current_exception());
      }
    });
  });
  return TaskHandle{std::move(next)};
}

TaskHandle when_all(std::span<const TaskHandle> handles) {
  if (handles.empty()) return TaskHandle::make_ready();

  struct Join {
    std::atomic<std::size_t> remaining;
    std::mutex mutex;
    std::exception_ptr first_error;
    std::shared_ptr<detail::TaskState> result = std::make_shared<detail::TaskState>();
  };
  auto join = std::make_shared<Join>();
  join->remaining.store(handles.size());
  auto result = join->result;

  for (const auto& h : handles) {
    h.state_->add_callback([join, s = h.state_] {
      if (s->error) {
        std::lock_guard lock{join->mutex};
        if (!join->first_error) join->first_error = s->error;
      }
      if (join->remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::exception_ptr e;
        {
          std::lock_guard lock{join->mutex};
          e = join->first_error;
        }
        join->result->complete(e);
      }
    });
  }
  return TaskHandle{std::move(result)};
}

void wait_all(std::span<const TaskHandle> handles) {
  for (const auto& h : handles) h.wait();
  for (const auto& h : handles) h.get();
}

}  // namespace taskfft
