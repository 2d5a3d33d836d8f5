#pragma once

// Collectives over a Transport. One Communicator per locality; its calls
// are collective (every rank makes the same calls in the same order) and
// blocking. Each call takes the next generation number, and every received
// frame is checked against the expected (generation, kind, source).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "taskfft/matrix.hpp"
#include "taskfft/timing.hpp"
#include "taskfft/transport.hpp"

namespace taskfft {

/// Per-locality all_to_all byte accounting.
struct CommStats {
  std::uint64_t a2a_bytes_in = 0;        // payload of every local part handed in
  std::uint64_t a2a_bytes_sent = 0;      // of which went over the transport
  std::uint64_t a2a_bytes_kept = 0;      // of which stayed local
  std::uint64_t a2a_bytes_received = 0;  // payload that arrived from peers
  std::uint64_t collectives = 0;
  std::uint64_t barriers = 0;
};

class Communicator {
 public:
  static constexpr std::size_t root = 0;

  explicit Communicator(Transport& transport) : transport_{transport} {}

  [[nodiscard]] std::size_t rank() const noexcept { return transport_.rank(); }
  [[nodiscard]] std::size_t size() const noexcept { return transport_.size(); }
  [[nodiscard]] Transport& transport() noexcept { return transport_; }
  [[nodiscard]] const CommStats& stats() const noexcept { return stats_; }
  [[nodiscard]] std::uint64_t generation() const noexcept { return generation_; }

  /// Rank r receives rows [r*N/n, (r+1)*N/n) of the root's matrix. `m` is
  /// only read on the root. Every rank checks divisibility before sending.
  [[nodiscard]] SignalMatrix scatter(const SignalMatrix* m, Extents global);

  /// parts[j] goes to rank j; result[s] is what rank s sent here. The part
  /// addressed to this rank is moved, not transmitted. Pairwise rounds:
  /// round k sends to (r+k) mod n and receives from (r-k) mod n.
  [[nodiscard]] std::vector<SpectrumMatrix> all_to_all(std::vector<SpectrumMatrix> parts);

  /// Root returns the rank-ordered concatenation of every slab; other ranks
  /// return an empty matrix.
  [[nodiscard]] SpectrumMatrix gather(SpectrumMatrix slab);

  /// Root returns one entry per rank; other ranks return an empty vector.
  [[nodiscard]] std::vector<PhaseTimings> gather_timings(const PhaseTimings& mine);

  void barrier();

 private:
  CollectiveTag next(CollectiveKind kind);
  void send(std::size_t dest, const CollectiveTag& tag, std::vector<Complex> payload);
  /// Receives from `source` and checks tag, source and element count.
  std::vector<Complex> receive(std::size_t source, const CollectiveTag& tag, std::size_t elements);

  Transport& transport_;
  std::uint64_t generation_ = 0;
  CommStats stats_;
};

}  // namespace taskfft
