#include "taskfft/communicator.hpp"

#include <cstring>

#include "taskfft/error.hpp"

namespace taskfft {

namespace {

// Reals travel as consecutive (even, odd) pairs; an odd tail is zero-padded.
std::vector<Complex> pack_reals(std::span<const double> in) {
  std::vector<Complex> out((in.size() + 1) / 2);
  for (std::size_t i = 0; i < in.size(); ++i) {
    auto& slot = reinterpret_cast<double(&)[2]>(out[i / 2]);
    slot[i % 2] = in[i];
  }
  return out;
}

void unpack_reals(std::span<const Complex> in, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& slot = reinterpret_cast<const double(&)[2]>(in[i / 2]);
    out[i] = slot[i % 2];
  }
}

}  // namespace

CollectiveTag Communicator::next(CollectiveKind kind) {
  ++stats_.collectives;
  return CollectiveTag{++generation_, kind};
}

void Communicator::send(std::size_t dest, const CollectiveTag& tag, std::vector<Complex> payload) {
  transport_.send(dest, WireMessage{tag, LocalityId{rank()}, std::move(payload)});
}

std::vector<Complex> Communicator::receive(std::size_t source, const CollectiveTag& tag,
                                           std::size_t elements) {
  WireMessage m = transport_.receive(source);
  const std::string where = "rank " + std::to_string(rank()) + " in " + to_string(tag);
  if (m.tag != tag) {
    throw ProtocolError(where + ": rank " + std::to_string(source) + " sent " + to_string(m.tag));
  }
  if (m.source.rank != source) {
    throw ProtocolError(where + ": expected rank " + std::to_string(source) + ", frame from rank " +
                        std::to_string(m.source.rank));
  }
  if (m.payload.size() != elements) {
    throw ProtocolError(where + ": rank " + std::to_string(source) + " sent " +
                        std::to_string(m.payload.size()) + " samples, expected " +
                        std::to_string(elements));
  }
  return std::move(m.payload);
}

SignalMatrix Communicator::scatter(const SignalMatrix* m, Extents global) {
  const std::size_t n = size();
  const auto parts = slab_partition(global.rows, n);
  const CollectiveTag tag = next(CollectiveKind::scatter);
  const Extents local{global.rows / n, global.cols};

  if (rank() == root) {
    if (m == nullptr || m->extents() != global) {
      throw ShapeError("scatter root needs a " + to_string(global) + " matrix");
    }
    for (std::size_t r = 1; r < n; ++r) send(r, tag, pack_reals(m->rows(parts[r].rows)));
    const auto own = m->rows(parts[0].rows);
    return SignalMatrix{local, std::vector<double>(own.begin(), own.end())};
  }
  const std::size_t count = local.size();
  const auto payload = receive(root, tag, (count + 1) / 2);
  SignalMatrix out{local};
  unpack_reals(payload, out.data());
  return out;
}

std::vector<SpectrumMatrix> Communicator::all_to_all(std::vector<SpectrumMatrix> parts) {
  const std::size_t n = size();
  const std::size_t me = rank();
  if (parts.size() != n) {
    throw ShapeError("all_to_all needs " + std::to_string(n) + " parts, got " +
                     std::to_string(parts.size()));
  }
  const Extents block = parts.front().extents();
  for (const auto& p : parts) {
    if (p.extents() != block) throw ShapeError("all_to_all parts differ in extents");
  }
  const CollectiveTag tag = next(CollectiveKind::all_to_all);
  const std::uint64_t block_bytes = block.size() * wire_sample_size;
  stats_.a2a_bytes_in += block_bytes * n;
  stats_.a2a_bytes_kept += block_bytes;

  std::vector<SpectrumMatrix> out(n);
  out[me] = std::move(parts[me]);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t to = (me + k) % n;
    const std::size_t from = (me + n - k) % n;
    send(to, tag, std::move(parts[to]).release());
    stats_.a2a_bytes_sent += block_bytes;
    out[from] = SpectrumMatrix{block, receive(from, tag, block.size())};
    stats_.a2a_bytes_received += block_bytes;
  }
  return out;
}

SpectrumMatrix Communicator::gather(SpectrumMatrix slab) {
  const std::size_t n = size();
  const CollectiveTag tag = next(CollectiveKind::gather);
  if (rank() != root) {
    send(root, tag, std::move(slab).release());
    return SpectrumMatrix{};
  }
  const Extents block = slab.extents();
  std::vector<SpectrumMatrix> parts;
  parts.reserve(n);
  parts.push_back(std::move(slab));
  for (std::size_t r = 1; r < n; ++r) parts.emplace_back(block, receive(r, tag, block.size()));
  return concatenate_slabs<Complex>(parts);
}

std::vector<PhaseTimings> Communicator::gather_timings(const PhaseTimings& mine) {
  constexpr std::size_t values = phase_count + 1;
  constexpr std::size_t samples = (values + 1) / 2;
  const CollectiveTag tag = next(CollectiveKind::gather);
  auto flatten = [](const PhaseTimings& t) {
    std::vector<double> v(t.seconds.begin(), t.seconds.end());
    v.push_back(t.total);
    return v;
  };
  if (rank() != root) {
    send(root, tag, pack_reals(flatten(mine)));
    return {};
  }
  std::vector<PhaseTimings> out{mine};
  for (std::size_t r = 1; r < size(); ++r) {
    const auto payload = receive(r, tag, samples);
    std::vector<double> v(values);
    unpack_reals(payload, v);
    PhaseTimings t;
    std::copy(v.begin(), v.begin() + phase_count, t.seconds.begin());
    t.total = v.back();
    out.push_back(t);
  }
  return out;
}

void Communicator::barrier() {
  const std::size_t n = size();
  const CollectiveTag tag = next(CollectiveKind::barrier);
  ++stats_.barriers;
  for (std::size_t k = 1; k < n; ++k) {
    send((rank() + k) % n, tag, {});
    (void)receive((rank() + n - k) % n, tag, 0);
  }
}

}  // namespace taskfft
