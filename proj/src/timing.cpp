#include "taskfft/timing.hpp"

#include <algorithm>
#include <numeric>

namespace taskfft {

const char* to_string(Phase p) noexcept {
  switch (p) {
    case Phase::fft_dim1:
      return "fft_dim1";
    case Phase::transpose_1:
      return "transpose_1";
    case Phase::fft_dim2:
      return "fft_dim2";
    case Phase::transpose_2:
      return "transpose_2";
    case Phase::communicate:
      return "communicate";
    case Phase::rearrange:
      return "rearrange";
  }
  return "unknown";
}

double PhaseTimings::phase_sum() const noexcept {
  return std::accumulate(seconds.begin(), seconds.end(), 0.0);
}

std::int64_t PhaseClock::now_ns() const noexcept {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
}

double PhaseClock::elapsed() const noexcept { return static_cast<double>(now_ns()) * 1e-9; }

void PhaseClock::note_task_end(Phase p) noexcept {
  const std::int64_t t = now_ns();
  auto& slot = task_end_ns_[static_cast<std::size_t>(p)];
  std::int64_t seen = slot.load(std::memory_order_relaxed);
  while (seen < t && !slot.compare_exchange_weak(seen, t, std::memory_order_acq_rel)) {
  }
}

void PhaseClock::close_at(Phase p, std::int64_t ns) {
  const std::int64_t until = std::max(ns, checkpoint_ns_);
  acc_[p] += static_cast<double>(until - checkpoint_ns_) * 1e-9;
  checkpoint_ns_ = until;
}

void PhaseClock::close_now(Phase p) { close_at(p, now_ns()); }

void PhaseClock::close_at_task_end(Phase p) {
  close_at(p, task_end_ns_[static_cast<std::size_t>(p)].load(std::memory_order_acquire));
}

PhaseTimings PhaseClock::finish() {
  PhaseTimings out = acc_;
  out.total = std::max(elapsed(), static_cast<double>(checkpoint_ns_) * 1e-9);
  return out;
}

void EventTrace::record(const Event& e) {
  std::lock_guard lock{mutex_};
  events_.push_back(e);
}

void EventTrace::barrier() {
  const auto t = tick();
  std::lock_guard lock{mutex_};
  barriers_.push_back(t);
}

std::vector<EventTrace::Event> EventTrace::events() const {
  std::lock_guard lock{mutex_};
  return events_;
}

std::vector<EventTrace::Event> EventTrace::events(Phase p) const {
  std::lock_guard lock{mutex_};
  std::vector<Event> out;
  std::copy_if(events_.begin(), events_.end(), std::back_inserter(out),
               [p](const Event& e) { return e.phase == p; });
  return out;
}

std::vector<std::uint64_t> EventTrace::barriers() const {
  std::lock_guard lock{mutex_};
  return barriers_;
}

std::size_t EventTrace::count(Phase p) const { return events(p).size(); }

std::optional<std::uint64_t> EventTrace::last_end(Phase p) const {
  std::optional<std::uint64_t> out;
  for (const auto& e : events(p)) {
    if (!out || e.end > *out) out = e.end;
  }
  return out;
}

std::optional<std::uint64_t> EventTrace::first_begin(Phase p) const {
  std::optional<std::uint64_t> out;
  for (const auto& e : events(p)) {
    if (!out || e.begin < *out) out = e.begin;
  }
  return out;
}

std::size_t EventTrace::begun_before(Phase p, std::uint64_t t) const {
  const auto ev = events(p);
  return static_cast<std::size_t>(
      std::count_if(ev.begin(), ev.end(), [t](const Event& e) { return e.begin < t; }));
}

void EventTrace::clear() {
  std::lock_guard lock{mutex_};
  events_.clear();
  barriers_.clear();
}

}  // namespace taskfft
