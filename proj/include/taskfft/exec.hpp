#pragma once

// Shared-memory 2D real-to-complex FFT.
//
// Every strategy runs the same four phases over an N x M real matrix:
//   1. r2c FFT of each row              -> A (N x M/2+1)
//   2. transpose                        -> B (M/2+1 x N)
//   3. c2c FFT of each row of B (in place)
//   4. transpose back                   -> C (N x M/2+1)
// They differ only in how tasks are formed and where barriers sit:
//
//   future_naive     FFT-dim1 task -> its own read-contiguous transpose task,
//                    one barrier, FFT-dim2 task -> its own read-contiguous
//                    transpose-back task.
//   future_opt       barrier after FFT-dim1; write-contiguous transpose tasks
//                    each continue into the FFT-dim2 of the rows they wrote;
//                    barrier; write-contiguous transpose-back. Barriers are
//                    dataflow joins, the caller only blocks at the end.
//   future_sync      blocking join after each of the four phases,
//                    write-contiguous transposes.
//   future_registry  future_sync, with every task entry point resolved by
//                    name through a TaskRegistry at launch.
//   parallel_loop    each phase is one bundled parallel loop with an
//                    implicit join at its end.
//
// All strategies perform identical arithmetic per element, so their output
// is bitwise identical for any worker count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>

#include "taskfft/kernel.hpp"
#include "taskfft/matrix.hpp"
#include "taskfft/task.hpp"
#include "taskfft/timing.hpp"

namespace taskfft {

enum class StrategyKind { future_naive, future_opt, future_sync, future_registry, parallel_loop };

inline constexpr std::array<StrategyKind, 5> all_strategies{
    StrategyKind::future_naive, StrategyKind::future_opt, StrategyKind::future_sync,
    StrategyKind::future_registry, StrategyKind::parallel_loop};

std::string_view to_string(StrategyKind s) noexcept;
std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept;

/// Rows per task. Unset means one row for the futurized strategies and
/// ceil(rows / workers) for parallel_loop.
struct TaskBundles {
  std::optional<std::size_t> fft;
  std::optional<std::size_t> transpose;
};

struct ExecConfig {
  std::size_t workers = 1;
  TaskBundles bundles;

  /// Throws ConfigurationError on zero workers or zero bundles.
  void validate() const;
};

/// Chunk size of a bundled loop over `iterations`: the knob when set,
/// otherwise ceil(iterations / workers).
[[nodiscard]] std::size_t loop_chunk_size(std::size_t iterations, std::size_t workers,
                                          std::optional<std::size_t> knob);

/// Runs body over [0, n) in chunks of `chunk` rows as pool tasks and joins
/// them before returning; the first task error is rethrown.
void parallel_for(WorkerPool& pool, std::size_t n, std::size_t chunk,
                  const std::function<void(RowRange)>& body);

/// Name-indexed task entry points. Lookups are counted.
class TaskRegistry {
 public:
  using Entry = std::function<void(RowRange)>;

  void add(std::string name, Entry entry);
  [[nodiscard]] bool contains(std::string_view name) const;
  /// Throws RegistryError for unknown names.
  [[nodiscard]] const Entry& lookup(std::string_view name) const;
  [[nodiscard]] std::size_t lookup_count() const noexcept { return lookups_.load(); }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry, std::less<>> entries_;
  mutable std::atomic<std::size_t> lookups_{0};
};

/// Throws InvalidSizeError unless rows and cols are powers of two >= 2.
void validate_extents(Extents e);

struct Fft2dResult {
  SpectrumMatrix spectrum;
  PhaseTimings timings;
  std::size_t tasks = 0;
  std::size_t registry_lookups = 0;
};

/// Owns a worker pool and a per-length plan cache; reuse it across runs so
/// timings exclude thread start-up and planning.
class FftEngine {
 public:
  explicit FftEngine(ExecConfig cfg);

  [[nodiscard]] const ExecConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] WorkerPool& pool() noexcept { return pool_; }

  /// Plans are cached per (length, kind) with batch 1.
  [[nodiscard]] Plan1D plan(std::size_t length, TransformKind kind);

  Fft2dResult run(const SignalMatrix& input, StrategyKind strategy, EventTrace* trace = nullptr);
  Fft2dResult run(const SignalMatrix& input, StrategyKind strategy, const TaskBundles& bundles,
                  EventTrace* trace = nullptr);

 private:
  ExecConfig cfg_;
  WorkerPool pool_;
  std::mutex plans_mutex_;
  std::map<std::pair<std::size_t, TransformKind>, Plan1D> plans_;
};

/// One-shot convenience: builds an engine for `cfg` and runs once.
Fft2dResult fft2d_r2c(const SignalMatrix& input, StrategyKind strategy, const ExecConfig& cfg,
                      EventTrace* trace = nullptr);

/// Number of 2D pipeline executions started in this process.
[[nodiscard]] std::uint64_t pipeline_executions() noexcept;

namespace detail {
void count_pipeline_execution() noexcept;
}

}  // namespace taskfft
