#pragma once

// Plan selection for the 2D pipeline.
//
// estimate  scores every candidate with a static cost model and runs
//           nothing.
// measure   runs every candidate three times on scratch data and keeps the
//           lowest median wall time.
// Ties go to the earlier candidate.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskfft/exec.hpp"

namespace taskfft {

enum class PlanningRigor { estimate, measure };

std::string_view to_string(PlanningRigor r) noexcept;
std::optional<PlanningRigor> parse_rigor(std::string_view name) noexcept;

struct Candidate {
  StrategyKind strategy = StrategyKind::future_sync;
  TaskBundles bundles;

  friend bool operator==(const Candidate& a, const Candidate& b) {
    return a.strategy == b.strategy && a.bundles.fft == b.bundles.fft &&
           a.bundles.transpose == b.bundles.transpose;
  }
};

std::string to_string(const Candidate& c);

/// Every strategy with default bundles, then the futurized strategies with
/// rows bundled so that each worker gets about four tasks per phase.
[[nodiscard]] std::vector<Candidate> default_candidates(Extents e, std::size_t workers);

/// Cost = alpha * flops + beta * weighted element accesses + overheads, each
/// phase taken along its critical path over `workers`. Units are arbitrary
/// but shared by all terms.
struct CostModel {
  double alpha = 1.0;            // per flop
  double beta = 2.0;             // per element read or written
  double cache_penalty = 4.0;    // weight of a strided element access
  double task_overhead = 2000.0;
  double lookup_overhead = 200.0;
  double barrier_overhead = 5000.0;
};

[[nodiscard]] double estimate_cost(Extents e, const Candidate& c, std::size_t workers,
                                   const CostModel& model = {});

struct CandidateSample {
  Candidate candidate;
  std::vector<double> seconds;  // measure: one per run
  double score = 0.0;           // estimate: cost; measure: median seconds
};

struct Plan2D {
  Extents extents;
  PlanningRigor rigor = PlanningRigor::estimate;
  Candidate choice;
  Plan1D plan_dim1;  // r2c over rows
  Plan1D plan_dim2;  // c2c over columns
  double planning_time = 0.0;
  std::vector<CandidateSample> samples;
};

/// Throws ConfigurationError for an empty candidate set and
/// InvalidSizeError for unsupported extents. Measure runs on `engine`.
[[nodiscard]] Plan2D plan_2d(Extents e, PlanningRigor rigor, FftEngine& engine,
                             std::span<const Candidate> candidates, const CostModel& model = {});
[[nodiscard]] Plan2D plan_2d(Extents e, PlanningRigor rigor, const ExecConfig& cfg,
                             std::span<const Candidate> candidates, const CostModel& model = {});

/// Runs `input` with the plan's choice. Throws ShapeError if the extents differ.
Fft2dResult execute(FftEngine& engine, const Plan2D& plan, const SignalMatrix& input);

/// Tab-separated audit log: a header, then one line per candidate with
/// strategy, fft bundle, transpose bundle, score and the comma-separated
/// samples. Unset bundles are written as "-".
void write_sample_log(std::ostream& out, const Plan2D& plan);
[[nodiscard]] std::vector<CandidateSample> read_sample_log(std::istream& in);

struct PlanKey {
  Extents extents;
  TransformKind kind = TransformKind::r2c;
  std::size_t workers = 1;
  PlanningRigor rigor = PlanningRigor::estimate;
  friend auto operator<=>(const PlanKey&, const PlanKey&) = default;
};

/// Concurrent lookups, exclusive stores.
class PlanCache {
 public:
  [[nodiscard]] std::optional<Plan2D> lookup(const PlanKey& key) const;
  void store(const PlanKey& key, Plan2D plan);
  [[nodiscard]] std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<PlanKey, Plan2D> plans_;
};

}  // namespace taskfft
