#pragma once

// Slab-decomposed 2D r2c FFT over a world of localities.
//
// Per locality, with N x M input, n localities, Nl = N/n, Mc = M/2+1 bins
// and Mc padded up to Mcp, a multiple of n (block width w = Mcp/n):
//
//   scatter           root -> Nl x M slab
//   fft_dim1          r2c rows                               Nl x Mc
//   rearrange         split into n column blocks             n x (Nl x w)
//   communicate       all_to_all
//   rearrange         concatenate received blocks            N x w
//   transpose_1                                              w x N
//   fft_dim2          c2c rows in place
//   rearrange         split into n column blocks             n x (w x Nl)
//   communicate       all_to_all
//   rearrange         concatenate, drop padding rows         Mc x Nl
//   transpose_2                                              Nl x Mc
//   gather            root <- N x Mc
//
// Padding bins are zero and never reach the output. The arithmetic per
// element matches the shared-memory pipeline, so results agree bitwise.
//
//   sync        each phase is a bundled parallel loop; a world barrier
//               follows every phase.
//   futurized   row tasks dispatched by name through a TaskRegistry,
//               transpose_1 tasks continue into fft_dim2 of the same rows;
//               the locality only blocks, and barriers the world, before
//               each all_to_all.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "taskfft/communicator.hpp"
#include "taskfft/exec.hpp"
#include "taskfft/transport.hpp"

namespace taskfft {

enum class DistStrategy { futurized, sync };

inline constexpr std::array<DistStrategy, 2> all_dist_strategies{DistStrategy::futurized,
                                                                 DistStrategy::sync};

std::string_view to_string(DistStrategy s) noexcept;
std::optional<DistStrategy> parse_dist_strategy(std::string_view name) noexcept;

enum class TransportKind { in_process, tcp };

std::string_view to_string(TransportKind t) noexcept;
std::optional<TransportKind> parse_transport(std::string_view name) noexcept;

struct WorldConfig {
  std::size_t n_locs = 1;
  TransportKind transport = TransportKind::in_process;
  std::vector<Endpoint> endpoints;  // tcp only, one per rank
  std::size_t workers_per_locality = 1;

  /// Throws ConfigurationError.
  void validate() const;
};

/// Padded bin count used by the redistribution: ceil(bins / n) * n.
[[nodiscard]] std::size_t padded_bins(std::size_t bins, std::size_t n_locs);

/// Throws InvalidSizeError / PartitionError unless `e` can be distributed
/// over n_locs localities.
void validate_distribution(Extents e, std::size_t n_locs);

struct LocalityResult {
  std::size_t rank = 0;
  SpectrumMatrix spectrum;  // full result on the root, empty elsewhere
  PhaseTimings timings;     // excludes scatter and gather
  double scatter_seconds = 0.0;
  double gather_seconds = 0.0;
  CommStats comm;
  std::size_t world_barriers = 0;
  std::size_t tasks = 0;
  std::size_t registry_lookups = 0;
};

/// Runs one locality's share of the pipeline. `input` is read on the root
/// only. `engine` supplies the locality's workers and 1D plans.
LocalityResult run_locality(Communicator& comm, FftEngine& engine, const SignalMatrix* input,
                            Extents extents, DistStrategy strategy);

struct DistResult {
  SpectrumMatrix spectrum;
  std::vector<LocalityResult> localities;  // ordered by rank

  /// Per-phase maximum over localities; total is the maximum total.
  [[nodiscard]] PhaseTimings max_timings() const;
  [[nodiscard]] std::uint64_t a2a_bytes_in() const;
  [[nodiscard]] std::uint64_t a2a_bytes_sent() const;
};

/// Per-phase maximum over a set of timings.
[[nodiscard]] PhaseTimings max_over(std::span<const PhaseTimings> t);

/// Runs a whole world inside this process, one thread per locality. With
/// tcp transport the localities talk over loopback sockets on
/// world.endpoints (or ephemeral 127.0.0.1 ports when none are given).
/// Each locality runs with `cfg`, workers replaced by
/// world.workers_per_locality. Any locality failure aborts the world and
/// the first error is rethrown.
DistResult fft2d_distributed(const SignalMatrix& input, DistStrategy strategy,
                             const WorldConfig& world, const ExecConfig& cfg);

}  // namespace taskfft
