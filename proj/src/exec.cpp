#include "taskfft/exec.hpp"

#include <array>
#include <vector>

#include "taskfft/error.hpp"

namespace taskfft {

namespace {

std::atomic<std::uint64_t> pipeline_counter{0};

constexpr std::array<std::pair<StrategyKind, std::string_view>, 5> strategy_names{{
    {StrategyKind::future_naive, "future_naive"},
    {StrategyKind::future_opt, "future_opt"},
    {StrategyKind::future_sync, "future_sync"},
    {StrategyKind::future_registry, "future_registry"},
    {StrategyKind::parallel_loop, "parallel_loop"},
}};

// Registry keys of the pipeline actions.
constexpr std::string_view action_fft_dim1 = "fft2d/fft_dim1";
constexpr std::string_view action_transpose_1 = "fft2d/transpose_1";
constexpr std::string_view action_fft_dim2 = "fft2d/fft_dim2";
constexpr std::string_view action_transpose_2 = "fft2d/transpose_2";

class Pipeline {
 public:
  Pipeline(WorkerPool& pool, const SignalMatrix& input, Plan1D row_plan, Plan1D col_plan,
           const ExecConfig& cfg, const TaskBundles& bundles, EventTrace* trace)
      : pool_{pool},
        input_{input},
        row_plan_{std::move(row_plan)},
        col_plan_{std::move(col_plan)},
        workers_{cfg.workers},
        bundles_{bundles},
        trace_{trace},
        n_{input.rows()},
        bins_{input.cols() / 2 + 1},
        a_{Extents{n_, bins_}},
        b_{Extents{bins_, n_}},
        c_{Extents{n_, bins_}} {}

  Fft2dResult run(StrategyKind strategy) {
    switch (strategy) {
      case StrategyKind::future_naive:
        run_naive();
        break;
      case StrategyKind::future_opt:
        run_opt();
        break;
      case StrategyKind::future_sync:
        run_sync(false);
        break;
      case StrategyKind::future_registry:
        run_sync(true);
        break;
      case StrategyKind::parallel_loop:
        run_loop();
        break;
    }
    Fft2dResult out;
    out.timings = clock_.finish();
    out.spectrum = std::move(c_);
    out.tasks = tasks_.load();
    out.registry_lookups = registry_.lookup_count();
    return out;
  }

 private:
  // Phase bodies. Each touches a disjoint set of destination elements per row range.
  void fft_dim1(RowRange r) { execute_r2c(row_plan_.with_batch(r.size()), input_.rows(r), a_.rows(r)); }
  void transpose1_read(RowRange r) { transpose_read_contiguous(a_, b_, r); }
  void transpose1_write(RowRange r) { transpose_write_contiguous(a_, b_, r); }
  void fft_dim2(RowRange r) {
    auto rows = b_.rows(r);
    execute_c2c(col_plan_.with_batch(r.size()), rows, rows);
  }
  void transpose2_read(RowRange r) { transpose_read_contiguous(b_, c_, r); }
  void transpose2_write(RowRange r) { transpose_write_contiguous(b_, c_, r); }

  template <class Body>
  std::function<void()> task(Phase phase, std::size_t index, RowRange r, Body body) {
    tasks_.fetch_add(1, std::memory_order_relaxed);
    return [this, phase, index, r, body = std::move(body)] {
      const std::uint64_t begin = trace_ ? trace_->tick() : 0;
      body(r);
      clock_.note_task_end(phase);
      if (trace_) trace_->record({phase, index, begin, trace_->tick()});
    };
  }

  void barrier() {
    if (trace_) trace_->barrier();
  }

  std::size_t fft_bundle() const { return bundles_.fft.value_or(1); }
  std::size_t transpose_bundle() const { return bundles_.transpose.value_or(1); }

  void run_naive() {
    std::vector<TaskHandle> first;
    const auto rows1 = bundle_rows(n_, fft_bundle());
    for (std::size_t i = 0; i < rows1.size(); ++i) {
      const RowRange r = rows1[i];
      first.push_back(async(pool_, task(Phase::fft_dim1, i, r, [this](RowRange x) { fft_dim1(x); }))
                          .then(pool_, task(Phase::transpose_1, i, r,
                                            [this](RowRange x) { transpose1_read(x); })));
    }
    wait_all(first);
    barrier();
    clock_.close_at_task_end(Phase::fft_dim1);
    clock_.close_at_task_end(Phase::transpose_1);

    std::vector<TaskHandle> second;
    const auto rows2 = bundle_rows(bins_, fft_bundle());
    for (std::size_t i = 0; i < rows2.size(); ++i) {
      const RowRange r = rows2[i];
      second.push_back(async(pool_, task(Phase::fft_dim2, i, r, [this](RowRange x) { fft_dim2(x); }))
                           .then(pool_, task(Phase::transpose_2, i, r,
                                             [this](RowRange x) { transpose2_read(x); })));
    }
    wait_all(second);
    clock_.close_at_task_end(Phase::fft_dim2);
    clock_.close_at_task_end(Phase::transpose_2);
  }

  void run_opt() {
    std::vector<TaskHandle> dim1;
    const auto rows1 = bundle_rows(n_, fft_bundle());
    for (std::size_t i = 0; i < rows1.size(); ++i) {
      dim1.push_back(
          async(pool_, task(Phase::fft_dim1, i, rows1[i], [this](RowRange x) { fft_dim1(x); })));
    }
    const TaskHandle after_dim1 = when_all(dim1).then(pool_, [this] { barrier(); });

    std::vector<TaskHandle> middle;
    const auto rows_b = bundle_rows(bins_, transpose_bundle());
    for (std::size_t i = 0; i < rows_b.size(); ++i) {
      const RowRange r = rows_b[i];
      middle.push_back(
          after_dim1
              .then(pool_, task(Phase::transpose_1, i, r, [this](RowRange x) { transpose1_write(x); }))
              .then(pool_, task(Phase::fft_dim2, i, r, [this](RowRange x) { fft_dim2(x); })));
    }
    const TaskHandle after_dim2 = when_all(middle).then(pool_, [this] { barrier(); });

    std::vector<TaskHandle> back;
    const auto rows_c = bundle_rows(n_, transpose_bundle());
    for (std::size_t i = 0; i < rows_c.size(); ++i) {
      back.push_back(after_dim2.then(
          pool_, task(Phase::transpose_2, i, rows_c[i], [this](RowRange x) { transpose2_write(x); })));
    }
    wait_all(back);
    // A failure upstream leaves `back` failed without running; the joins
    // above still guarantee every launched task has settled.
    for (Phase p : {Phase::fft_dim1, Phase::transpose_1, Phase::fft_dim2, Phase::transpose_2}) {
      clock_.close_at_task_end(p);
    }
  }

  template <class Body>
  void sync_phase(Phase phase, std::size_t rows, std::size_t bundle, Body body, bool interior) {
    std::vector<TaskHandle> handles;
    const auto ranges = bundle_rows(rows, bundle);
    handles.reserve(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      handles.push_back(async(pool_, task(phase, i, ranges[i], body)));
    }
    wait_all(handles);
    if (interior) barrier();
    clock_.close_now(phase);
  }

  void run_sync(bool through_registry) {
    if (through_registry) {
      registry_.add(std::string{action_fft_dim1}, [this](RowRange r) { fft_dim1(r); });
      registry_.add(std::string{action_transpose_1}, [this](RowRange r) { transpose1_write(r); });
      registry_.add(std::string{action_fft_dim2}, [this](RowRange r) { fft_dim2(r); });
      registry_.add(std::string{action_transpose_2}, [this](RowRange r) { transpose2_write(r); });
    }
    // Registry mode resolves the entry point once per launched task.
    auto entry = [this, through_registry](std::string_view key, auto direct) -> TaskRegistry::Entry {
      if (!through_registry) return direct;
      const TaskRegistry* reg = &registry_;
      return [reg, key](RowRange r) { reg->lookup(key)(r); };
    };
    sync_phase(Phase::fft_dim1, n_, fft_bundle(),
               entry(action_fft_dim1, [this](RowRange r) { fft_dim1(r); }), true);
    sync_phase(Phase::transpose_1, bins_, transpose_bundle(),
               entry(action_transpose_1, [this](RowRange r) { transpose1_write(r); }), true);
    sync_phase(Phase::fft_dim2, bins_, fft_bundle(),
               entry(action_fft_dim2, [this](RowRange r) { fft_dim2(r); }), true);
    sync_phase(Phase::transpose_2, n_, transpose_bundle(),
               entry(action_transpose_2, [this](RowRange r) { transpose2_write(r); }), false);
  }

  template <class Body>
  void loop_phase(Phase phase, std::size_t rows, std::optional<std::size_t> knob, Body body,
                  bool interior) {
    const std::size_t chunk = loop_chunk_size(rows, workers_, knob);
    std::size_t index = 0;
    std::vector<TaskHandle> handles;
    for (const RowRange r : bundle_rows(rows, chunk)) {
      handles.push_back(async(pool_, task(phase, index++, r, body)));
    }
    wait_all(handles);
    if (interior) barrier();
    clock_.close_now(phase);
  }

  void run_loop() {
    loop_phase(Phase::fft_dim1, n_, bundles_.fft, [this](RowRange r) { fft_dim1(r); }, true);
    loop_phase(Phase::transpose_1, bins_, bundles_.transpose,
               [this](RowRange r) { transpose1_write(r); }, true);
    loop_phase(Phase::fft_dim2, bins_, bundles_.fft, [this](RowRange r) { fft_dim2(r); }, true);
    loop_phase(Phase::transpose_2, n_, bundles_.transpose,
               [this](RowRange r) { transpose2_write(r); }, false);
  }

  WorkerPool& pool_;
  const SignalMatrix& input_;
  Plan1D row_plan_;
  Plan1D col_plan_;
  std::size_t workers_;
  TaskBundles bundles_;
  EventTrace* trace_;
  std::size_t n_;
  std::size_t bins_;
  SpectrumMatrix a_;
  SpectrumMatrix b_;
  SpectrumMatrix c_;
  PhaseClock clock_;
  TaskRegistry registry_;
  std::atomic<std::size_t> tasks_{0};
};

}  // namespace

std::string_view to_string(StrategyKind s) noexcept {
  for (const auto& [kind, name] : strategy_names) {
    if (kind == s) return name;
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept {
  for (const auto& [kind, n] : strategy_names) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

void ExecConfig::validate() const {
  if (workers == 0) throw ConfigurationError("workers must be >= 1");
  if (bundles.fft && *bundles.fft == 0) throw ConfigurationError("fft bundle must be >= 1");
  if (bundles.transpose && *bundles.transpose == 0) {
    throw ConfigurationError("transpose bundle must be >= 1");
  }
}

std::size_t loop_chunk_size(std::size_t iterations, std::size_t workers,
                            std::optional<std::size_t> knob) {
  if (knob) {
    if (*knob == 0) throw ConfigurationError("loop chunk must be >= 1");
    return *knob;
  }
  if (workers == 0) throw ConfigurationError("workers must be >= 1");
  return std::max<std::size_t>(1, (iterations + workers - 1) / workers);
}

void parallel_for(WorkerPool& pool, std::size_t n, std::size_t chunk,
                  const std::function<void(RowRange)>& body) {
  std::vector<TaskHandle> handles;
  for (const RowRange r : bundle_rows(n, chunk)) {
    handles.push_back(async(pool, [&body, r] { body(r); }));
  }
  wait_all(handles);
}

void TaskRegistry::add(std::string name, Entry entry) {
  std::unique_lock lock{mutex_};
  entries_.insert_or_assign(std::move(name), std::move(entry));
}

bool TaskRegistry::contains(std::string_view name) const {
  std::shared_lock lock{mutex_};
  return entries_.find(name) != entries_.end();
}

const TaskRegistry::Entry& TaskRegistry::lookup(std::string_view name) const {
  lookups_.fetch_add(1, std::memory_order_relaxed);
  std::shared_lock lock{mutex_};
  const auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw RegistryError("no task registered under '" + std::string{name} + "'");
  }
  // Entries are never removed, so the reference outlives the lock.
  return it->second;
}

void validate_extents(Extents e) {
  for (const auto& [what, v] : {std::pair{"rows", e.rows}, std::pair{"cols", e.cols}}) {
    if (v < 2 || !is_power_of_two(v)) {
      throw InvalidSizeError(std::string{"matrix "} + what + " = " + std::to_string(v) +
                             " is not a power of two >= 2");
    }
  }
}

FftEngine::FftEngine(ExecConfig cfg) : cfg_{(cfg.validate(), cfg)}, pool_{cfg_.workers} {}

Plan1D FftEngine::plan(std::size_t length, TransformKind kind) {
  std::lock_guard lock{plans_mutex_};
  const auto key = std::pair{length, kind};
  if (auto it = plans_.find(key); it != plans_.end()) return it->second;
  Plan1D p = plan_1d(length, kind);
  plans_.emplace(key, p);
  return p;
}

Fft2dResult FftEngine::run(const SignalMatrix& input, StrategyKind strategy, EventTrace* trace) {
  return run(input, strategy, cfg_.bundles, trace);
}

Fft2dResult FftEngine::run(const SignalMatrix& input, StrategyKind strategy,
                           const TaskBundles& bundles, EventTrace* trace) {
  validate_extents(input.extents());
  ExecConfig effective = cfg_;
  effective.bundles = bundles;
  effective.validate();
  detail::count_pipeline_execution();
  Pipeline pipeline{pool_,
                    input,
                    plan(input.cols(), TransformKind::r2c),
                    plan(input.rows(), TransformKind::c2c_forward),
                    effective,
                    bundles,
                    trace};
  return pipeline.run(strategy);
}

Fft2dResult fft2d_r2c(const SignalMatrix& input, StrategyKind strategy, const ExecConfig& cfg,
                      EventTrace* trace) {
  validate_extents(input.extents());
  FftEngine engine{cfg};
  return engine.run(input, strategy, trace);
}

std::uint64_t pipeline_executions() noexcept { return pipeline_counter.load(); }

namespace detail {
void count_pipeline_execution() noexcept { pipeline_counter.fetch_add(1); }
}  // namespace detail

}  // namespace taskfft
