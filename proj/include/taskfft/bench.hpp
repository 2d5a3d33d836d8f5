#pragma once

// Benchmark harness: repeated timed runs with one untimed warm-up, a
// correctness check on every run, order statistics per phase, and CSV/JSON
// output.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "taskfft/dist.hpp"
#include "taskfft/exec.hpp"
#include "taskfft/planner.hpp"
#include "taskfft/stats.hpp"

namespace taskfft {

/// 64-bit LCG: s' = s * 6364136223846793005 + 1442695040888963407 (mod 2^64).
/// next_double() maps the high 53 bits to [0, 1).
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) noexcept : state_{seed} {}

  std::uint64_t next_u64() noexcept {
    state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
    return state_;
  }
  double next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Row-major fill from Lcg{seed}.
[[nodiscard]] SignalMatrix synthetic_input(Extents e, std::uint64_t seed);

/// Direct-summation 2D r2c DFT, rows then columns.
[[nodiscard]] SpectrumMatrix reference_fft2d(const SignalMatrix& in);

/// Extents up to this size in both dimensions are checked against
/// reference_fft2d; larger runs are checked for cross-run agreement.
inline constexpr std::size_t oracle_limit = 64;
inline constexpr double oracle_tolerance = 1e-10;
inline constexpr std::size_t default_repetitions = 50;
inline constexpr Extents default_extents{1024, 1024};

/// Correctness check applied to every benchmark run of one input. Small
/// inputs are compared with reference_fft2d; every input is also compared
/// bitwise with the pinned reference, or with the first spectrum checked
/// when none was pinned and there is no oracle.
class SpectrumCheck {
 public:
  explicit SpectrumCheck(const SignalMatrix& input);

  void pin(SpectrumMatrix reference);
  /// Throws VerificationError with a numeric diff report.
  void check(const SpectrumMatrix& s, const std::string& label);

 private:
  struct Diff {
    double max_abs_diff = 0.0;
    double relative = 0.0;
    std::size_t worst = 0;
  };
  static Diff compare(const SpectrumMatrix& a, const SpectrumMatrix& ref);

  std::optional<SpectrumMatrix> oracle_;
  std::optional<SpectrumMatrix> agreed_;
};

struct RunSpec {
  Extents extents = default_extents;
  std::vector<StrategyKind> strategies{StrategyKind::future_sync};
  std::vector<DistStrategy> dist_strategies{DistStrategy::futurized};
  /// Set: plan over `strategies` (with `bundles`) and run the choice.
  std::optional<PlanningRigor> rigor;
  std::vector<std::size_t> workers{1};
  std::size_t repetitions = default_repetitions;
  std::uint64_t seed = 1;
  TaskBundles bundles;

  std::vector<std::size_t> n_locs{1};
  TransportKind transport = TransportKind::in_process;
  std::vector<Endpoint> endpoints;

  /// Throws ConfigurationError.
  void validate() const;
};

struct RunRecord {
  Extents extents;
  std::string strategy;
  std::string rigor = "none";
  std::size_t workers = 1;
  std::size_t n_locs = 1;
  std::string transport = "shared";
  std::vector<PhaseTimings> repetitions;
  std::array<OrderStats, phase_count> phases{};
  OrderStats total;
  double planning_time_s = 0.0;
  std::uint64_t a2a_bytes_in = 0;
  std::uint64_t a2a_bytes_sent = 0;

  /// Recomputes `phases` and `total` from `repetitions`.
  void aggregate();
};

/// Times `fn` once untimed and `reps` times; fn returns the run's timings.
template <class Fn>
std::vector<PhaseTimings> repeat(std::size_t reps, Fn&& fn) {
  (void)fn();
  std::vector<PhaseTimings> out;
  out.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) out.push_back(fn());
  return out;
}

/// One record per (worker count, strategy), or per worker count when a
/// rigor is set. Throws VerificationError on a wrong spectrum.
[[nodiscard]] std::vector<RunRecord> run_scaling(const RunSpec& spec);

/// One record per (workers, n_locs, distributed strategy), all localities
/// in this process. Phase timings are the per-repetition maximum over
/// localities.
[[nodiscard]] std::vector<RunRecord> run_distributed(const RunSpec& spec);

struct RankRun {
  std::optional<RunRecord> record;  // root only
  SpectrumMatrix spectrum;          // root only
};

/// This process's locality of a multi-process world over `transport`.
/// Every rank runs the same spec; the first entries of workers, n_locs and
/// dist_strategies are used.
[[nodiscard]] RankRun run_distributed_rank(const RunSpec& spec, Transport& transport);

/// Header, then 7 rows per record: the six phases in order, then "total".
void emit_csv(std::ostream& out, const std::vector<RunRecord>& records);

inline constexpr std::array<const char*, 12> csv_columns{
    "extents", "strategy", "rigor", "workers", "n_locs", "transport",
    "phase", "median_s", "min_s", "max_s", "repetitions", "planning_time_s"};

struct CsvRow {
  std::string extents;
  std::string strategy;
  std::string rigor;
  std::size_t workers = 0;
  std::size_t n_locs = 0;
  std::string transport;
  std::string phase;
  double median_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
  std::size_t repetitions = 0;
  double planning_time_s = 0.0;
};

/// Throws ConfigurationError on a header or field mismatch.
[[nodiscard]] std::vector<CsvRow> parse_csv(std::istream& in);

/// Run metadata as JSON: generator, warm-up, process model, run settings.
void write_metadata(std::ostream& out, const RunSpec& spec, const std::vector<RunRecord>& records);

}  // namespace taskfft
