#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

namespace taskfft {

enum class Phase : std::size_t { fft_dim1, transpose_1, fft_dim2, transpose_2, communicate, rearrange };

inline constexpr std::size_t phase_count = 6;
inline constexpr std::array<Phase, phase_count> all_phases{
    Phase::fft_dim1, Phase::transpose_1, Phase::fft_dim2,
    Phase::transpose_2, Phase::communicate, Phase::rearrange};

const char* to_string(Phase p) noexcept;

/// Wall-clock seconds per pipeline phase plus the end-to-end total.
struct PhaseTimings {
  std::array<double, phase_count> seconds{};
  double total = 0.0;

  double& operator[](Phase p) noexcept { return seconds[static_cast<std::size_t>(p)]; }
  double operator[](Phase p) const noexcept { return seconds[static_cast<std::size_t>(p)]; }
  [[nodiscard]] double phase_sum() const noexcept;
};

/// Attributes wall time to phases as a sequence of segments, each running
/// from the previous checkpoint to the point a phase closed. Tasks report
/// their completion time; when phases overlap, the overlapped work lands in
/// whichever phase closes first.
class PhaseClock {
 public:
  using Clock = std::chrono::steady_clock;

  PhaseClock() : start_{Clock::now()} {
    for (auto& e : task_end_ns_) e.store(-1, std::memory_order_relaxed);
  }

  [[nodiscard]] double elapsed() const noexcept;

  /// Thread-safe. Records "a task of phase p finished now".
  void note_task_end(Phase p) noexcept;

  /// Closes a segment at the current time.
  void close_now(Phase p);
  /// Closes a segment at the latest reported task end of p (or the previous
  /// checkpoint if no task of p reported after it).
  void close_at_task_end(Phase p);

  [[nodiscard]] PhaseTimings finish();

 private:
  void close_at(Phase p, std::int64_t ns);
  [[nodiscard]] std::int64_t now_ns() const noexcept;

  Clock::time_point start_;
  std::int64_t checkpoint_ns_ = 0;
  std::array<std::atomic<std::int64_t>, phase_count> task_end_ns_;
  PhaseTimings acc_{};
};

/// Logical-clock trace of task begin/end events and barriers. Ticks come
/// from one atomic counter, so comparing ticks of different threads is
/// meaningful: end(a) < begin(b) means a finished before b started.
class EventTrace {
 public:
  struct Event {
    Phase phase;
    std::size_t task;
    std::uint64_t begin;
    std::uint64_t end;
  };

  [[nodiscard]] std::uint64_t tick() noexcept { return clock_.fetch_add(1, std::memory_order_seq_cst); }
  void record(const Event& e);
  void barrier();

  [[nodiscard]] std::vector<Event> events() const;
  [[nodiscard]] std::vector<Event> events(Phase p) const;
  [[nodiscard]] std::vector<std::uint64_t> barriers() const;
  [[nodiscard]] std::size_t count(Phase p) const;
  [[nodiscard]] std::optional<std::uint64_t> last_end(Phase p) const;
  [[nodiscard]] std::optional<std::uint64_t> first_begin(Phase p) const;
  /// Tasks of phase p that began before tick t.
  [[nodiscard]] std::size_t begun_before(Phase p, std::uint64_t t) const;
  void clear();

 private:
  std::atomic<std::uint64_t> clock_{0};
  mutable std::mutex mutex_;
  std::vector<Event> events_;
  std::vector<std::uint64_t> barriers_;
};

}  // namespace taskfft
