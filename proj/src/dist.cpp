#include "taskfft/dist.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "taskfft/error.hpp"

namespace taskfft {

namespace {

constexpr std::string_view action_fft_dim1 = "dist/fft_dim1";
constexpr std::string_view action_transpose_1 = "dist/transpose_1";
constexpr std::string_view action_fft_dim2 = "dist/fft_dim2";
constexpr std::string_view action_transpose_2 = "dist/transpose_2";

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class LocalPipeline {
 public:
  LocalPipeline(Communicator& comm, FftEngine& engine, Extents global, DistStrategy strategy)
      : comm_{comm},
        engine_{engine},
        strategy_{strategy},
        n_{comm.size()},
        rows_{global.rows},
        local_rows_{global.rows / comm.size()},
        bins_{global.cols / 2 + 1},
        padded_{padded_bins(bins_, comm.size())},
        width_{padded_ / comm.size()},
        row_plan_{engine.plan(global.cols, TransformKind::r2c)},
        col_plan_{engine.plan(global.rows, TransformKind::c2c_forward)} {}

  LocalityResult run(SignalMatrix slab) {
    slab_ = std::move(slab);
    if (strategy_ == DistStrategy::futurized) {
      registry_.add(std::string{action_fft_dim1}, [this](RowRange r) { fft_dim1(r); });
      registry_.add(std::string{action_transpose_1}, [this](RowRange r) { transpose_1(r); });
      registry_.add(std::string{action_fft_dim2}, [this](RowRange r) { fft_dim2(r); });
      registry_.add(std::string{action_transpose_2}, [this](RowRange r) { transpose_2(r); });
      run_futurized();
    } else {
      run_sync();
    }
    LocalityResult out;
    out.rank = comm_.rank();
    out.timings = clock_.finish();
    out.spectrum = std::move(c_);
    out.world_barriers = world_barriers_;
    out.tasks = tasks_.load();
    out.registry_lookups = registry_.lookup_count();
    return out;
  }

 private:
  void fft_dim1(RowRange r) {
    execute_r2c(row_plan_.with_batch(r.size()), slab_.rows(r), a_.rows(r));
  }
  void transpose_1(RowRange r) { transpose_write_contiguous(cat1_, b_, r); }
  void fft_dim2(RowRange r) {
    auto rows = b_.rows(r);
    execute_c2c(col_plan_.with_batch(r.size()), rows, rows);
  }
  void transpose_2(RowRange r) { transpose_write_contiguous(cat2_, c_, r); }

  void world_barrier() {
    comm_.barrier();
    ++world_barriers_;
  }

  std::size_t fft_chunk(std::size_t rows) const {
    return loop_chunk_size(rows, engine_.config().workers, engine_.config().bundles.fft);
  }
  std::size_t transpose_chunk(std::size_t rows) const {
    return loop_chunk_size(rows, engine_.config().workers, engine_.config().bundles.transpose);
  }

  // Bundled loop, then a world barrier, the whole step billed to `phase`.
  template <class Body>
  void loop_phase(Phase phase, std::size_t rows, std::size_t chunk, Body body) {
    tasks_ += bundle_rows(rows, chunk).size();
    parallel_for(engine_.pool(), rows, chunk, body);
    world_barrier();
    clock_.close_now(phase);
  }

  template <class Step>
  void local_phase(Phase phase, Step step) {
    step();
    world_barrier();
    clock_.close_now(phase);
  }

  void split_first() { blocks_ = split_into_column_blocks(a_, n_, padded_); }
  void concat_first() {
    cat1_ = concatenate_slabs<Complex>(received_);
    received_.clear();
  }
  void split_second() { blocks_ = split_into_column_blocks(b_, n_, rows_); }
  void concat_second() {
    cat2_ = concatenate_slabs<Complex>(received_);
    cat2_.truncate_rows(bins_);
    received_.clear();
  }
  void exchange() { received_ = comm_.all_to_all(std::move(blocks_)); }

  void allocate() {
    a_ = SpectrumMatrix{Extents{local_rows_, bins_}};
    b_ = SpectrumMatrix{Extents{width_, rows_}};
    c_ = SpectrumMatrix{Extents{local_rows_, bins_}};
  }

  void run_sync() {
    allocate();
    loop_phase(Phase::fft_dim1, local_rows_, fft_chunk(local_rows_),
               [this](RowRange r) { fft_dim1(r); });
    local_phase(Phase::rearrange, [this] { split_first(); });
    local_phase(Phase::communicate, [this] { exchange(); });
    local_phase(Phase::rearrange, [this] { concat_first(); });
    loop_phase(Phase::transpose_1, width_, transpose_chunk(width_),
               [this](RowRange r) { transpose_1(r); });
    loop_phase(Phase::fft_dim2, width_, fft_chunk(width_), [this](RowRange r) { fft_dim2(r); });
    local_phase(Phase::rearrange, [this] { split_second(); });
    local_phase(Phase::communicate, [this] { exchange(); });
    local_phase(Phase::rearrange, [this] { concat_second(); });
    loop_phase(Phase::transpose_2, local_rows_, transpose_chunk(local_rows_),
               [this](RowRange r) { transpose_2(r); });
  }

  std::function<void()> task(Phase phase, std::string_view key, RowRange r) {
    ++tasks_;
    return [this, phase, key, r] {
      registry_.lookup(key)(r);
      clock_.note_task_end(phase);
    };
  }

  std::size_t futurized_bundle(const std::optional<std::size_t>& knob) const {
    return knob.value_or(1);
  }

  void run_futurized() {
    allocate();
    WorkerPool& pool = engine_.pool();
    const auto& bundles = engine_.config().bundles;

    std::vector<TaskHandle> dim1;
    for (const RowRange r : bundle_rows(local_rows_, futurized_bundle(bundles.fft))) {
      dim1.push_back(async(pool, task(Phase::fft_dim1, action_fft_dim1, r)));
    }
    wait_all(dim1);
    clock_.close_at_task_end(Phase::fft_dim1);

    split_first();
    clock_.close_now(Phase::rearrange);
    world_barrier();
    exchange();
    clock_.close_now(Phase::communicate);
    concat_first();
    clock_.close_now(Phase::rearrange);

    std::vector<TaskHandle> middle;
    for (const RowRange r : bundle_rows(width_, futurized_bundle(bundles.transpose))) {
      middle.push_back(async(pool, task(Phase::transpose_1, action_transpose_1, r))
                           .then(pool, task(Phase::fft_dim2, action_fft_dim2, r)));
    }
    wait_all(middle);
    clock_.close_at_task_end(Phase::transpose_1);
    clock_.close_at_task_end(Phase::fft_dim2);

    split_second();
    clock_.close_now(Phase::rearrange);
    world_barrier();
    exchange();
    clock_.close_now(Phase::communicate);
    concat_second();
    clock_.close_now(Phase::rearrange);

    std::vector<TaskHandle> back;
    for (const RowRange r : bundle_rows(local_rows_, futurized_bundle(bundles.transpose))) {
      back.push_back(async(pool, task(Phase::transpose_2, action_transpose_2, r)));
    }
    wait_all(back);
    clock_.close_at_task_end(Phase::transpose_2);
  }

  Communicator& comm_;
  FftEngine& engine_;
  DistStrategy strategy_;
  std::size_t n_;
  std::size_t rows_;
  std::size_t local_rows_;
  std::size_t bins_;
  std::size_t padded_;
  std::size_t width_;
  Plan1D row_plan_;
  Plan1D col_plan_;

  SignalMatrix slab_;
  SpectrumMatrix a_;
  std::vector<SpectrumMatrix> blocks_;
  std::vector<SpectrumMatrix> received_;
  SpectrumMatrix cat1_;
  SpectrumMatrix b_;
  SpectrumMatrix cat2_;
  SpectrumMatrix c_;

  TaskRegistry registry_;
  PhaseClock clock_;
  std::atomic<std::size_t> tasks_{0};
  std::size_t world_barriers_ = 0;
};

}  // namespace

std::string_view to_string(DistStrategy s) noexcept {
  return s == DistStrategy::futurized ? "futurized_dist" : "sync_dist";
}

std::optional<DistStrategy> parse_dist_strategy(std::string_view name) noexcept {
  for (auto s : all_dist_strategies) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view to_string(TransportKind t) noexcept {
  return t == TransportKind::tcp ? "tcp" : "inproc";
}

std::optional<TransportKind> parse_transport(std::string_view name) noexcept {
  if (name == "inproc") return TransportKind::in_process;
  if (name == "tcp") return TransportKind::tcp;
  return std::nullopt;
}

void WorldConfig::validate() const {
  if (n_locs == 0) throw ConfigurationError("n_locs must be at least 1");
  if (workers_per_locality == 0) throw ConfigurationError("workers_per_locality must be at least 1");
  if (transport == TransportKind::tcp && !endpoints.empty() && endpoints.size() != n_locs) {
    throw ConfigurationError("tcp world of " + std::to_string(n_locs) + " localities given " +
                             std::to_string(endpoints.size()) + " endpoints");
  }
}

std::size_t padded_bins(std::size_t bins, std::size_t n_locs) {
  return (bins + n_locs - 1) / n_locs * n_locs;
}

void validate_distribution(Extents e, std::size_t n_locs) {
  validate_extents(e);
  if (n_locs == 0 || e.rows % n_locs != 0) {
    throw PartitionError("cannot distribute " + std::to_string(e.rows) + " rows over " +
                         std::to_string(n_locs) + " localities");
  }
}

LocalityResult run_locality(Communicator& comm, FftEngine& engine, const SignalMatrix* input,
                            Extents extents, DistStrategy strategy) {
  validate_distribution(extents, comm.size());
  detail::count_pipeline_execution();
  const CommStats before = comm.stats();

  auto t0 = std::chrono::steady_clock::now();
  SignalMatrix slab = comm.scatter(input, extents);
  const double scatter_s = seconds_since(t0);

  LocalPipeline pipeline{comm, engine, extents, strategy};
  LocalityResult out = pipeline.run(std::move(slab));

  t0 = std::chrono::steady_clock::now();
  out.spectrum = comm.gather(std::move(out.spectrum));
  out.gather_seconds = seconds_since(t0);
  out.scatter_seconds = scatter_s;

  const CommStats& after = comm.stats();
  out.comm.a2a_bytes_in = after.a2a_bytes_in - before.a2a_bytes_in;
  out.comm.a2a_bytes_sent = after.a2a_bytes_sent - before.a2a_bytes_sent;
  out.comm.a2a_bytes_kept = after.a2a_bytes_kept - before.a2a_bytes_kept;
  out.comm.a2a_bytes_received = after.a2a_bytes_received - before.a2a_bytes_received;
  out.comm.collectives = after.collectives - before.collectives;
  out.comm.barriers = after.barriers - before.barriers;
  return out;
}

PhaseTimings max_over(std::span<const PhaseTimings> t) {
  PhaseTimings out;
  for (const auto& x : t) {
    for (std::size_t i = 0; i < phase_count; ++i) out.seconds[i] = std::max(out.seconds[i], x.seconds[i]);
    out.total = std::max(out.total, x.total);
  }
  return out;
}

PhaseTimings DistResult::max_timings() const {
  std::vector<PhaseTimings> all;
  for (const auto& l : localities) all.push_back(l.timings);
  return max_over(all);
}

std::uint64_t DistResult::a2a_bytes_in() const {
  std::uint64_t s = 0;
  for (const auto& l : localities) s += l.comm.a2a_bytes_in;
  return s;
}

std::uint64_t DistResult::a2a_bytes_sent() const {
  std::uint64_t s = 0;
  for (const auto& l : localities) s += l.comm.a2a_bytes_sent;
  return s;
}

DistResult fft2d_distributed(const SignalMatrix& input, DistStrategy strategy,
                             const WorldConfig& world, const ExecConfig& cfg) {
  world.validate();
  validate_distribution(input.extents(), world.n_locs);
  ExecConfig local_cfg = cfg;
  local_cfg.workers = world.workers_per_locality;
  local_cfg.validate();

  const std::size_t n = world.n_locs;
  std::vector<std::unique_ptr<Transport>> transports(n);
  std::optional<InProcessHub> hub;
  std::vector<Endpoint> endpoints = world.endpoints;
  std::vector<TcpListener> listeners;
  if (world.transport == TransportKind::in_process) {
    hub.emplace(n);
    for (std::size_t r = 0; r < n; ++r) transports[r] = hub->endpoint(r);
  } else {
    // Bind every listener before any rank connects.
    if (endpoints.empty()) endpoints.assign(n, Endpoint{"127.0.0.1", 0});
    for (auto& e : endpoints) {
      listeners.emplace_back(e);
      e.port = listeners.back().port();
    }
  }

  DistResult result;
  result.localities.resize(n);
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto body = [&](std::size_t rank) {
    try {
      std::unique_ptr<Transport> transport = std::move(transports[rank]);
      if (!transport) transport = connect_tcp_world(rank, endpoints, std::move(listeners[rank]));
      Communicator comm{*transport};
      FftEngine engine{local_cfg};
      result.localities[rank] =
          run_locality(comm, engine, rank == Communicator::root ? &input : nullptr,
                       input.extents(), strategy);
    } catch (...) {
      std::lock_guard lock{error_mutex};
      if (!first_error) first_error = std::current_exception();
      if (hub) {
        std::string why = "locality failure";
        try {
          throw;
        } catch (const std::exception& e) {
          why = "rank " + std::to_string(rank) + " failed: " + e.what();
        } catch (...) {
        }
        hub->abort(why);
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(n);
  for (std::size_t r = 0; r < n; ++r) threads.emplace_back(body, r);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  result.spectrum = std::move(result.localities[Communicator::root].spectrum);
  return result;
}

}  // namespace taskfft
