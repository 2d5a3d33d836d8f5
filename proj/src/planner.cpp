#include "taskfft/planner.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "taskfft/error.hpp"
#include "taskfft/stats.hpp"

namespace taskfft {

namespace {

constexpr int measure_runs = 3;

double log2d(std::size_t n) { return std::log2(static_cast<double>(n)); }

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Critical path of a phase of `rows` row-units split into tasks of `bundle`
// rows over `workers`: rounds of full tasks, each paying one overhead.
double phase_path(std::size_t rows, std::size_t bundle, std::size_t workers, double per_row,
                  double per_task) {
  bundle = std::max<std::size_t>(1, std::min(bundle, rows));
  const std::size_t tasks = ceil_div(rows, bundle);
  const std::size_t rounds = ceil_div(tasks, workers);
  return static_cast<double>(rounds) * (static_cast<double>(bundle) * per_row + per_task);
}

SignalMatrix scratch(Extents e) {
  SignalMatrix m{e};
  auto d = m.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::sin(0.37 * static_cast<double>(i));
  return m;
}

std::string bundle_text(const std::optional<std::size_t>& b) {
  return b ? std::to_string(*b) : std::string{"-"};
}

std::optional<std::size_t> parse_bundle(const std::string& s) {
  if (s == "-") return std::nullopt;
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

std::string_view to_string(PlanningRigor r) noexcept {
  return r == PlanningRigor::measure ? "measure" : "estimate";
}

std::optional<PlanningRigor> parse_rigor(std::string_view name) noexcept {
  if (name == "estimate") return PlanningRigor::estimate;
  if (name == "measure") return PlanningRigor::measure;
  return std::nullopt;
}

std::string to_string(const Candidate& c) {
  return std::string{to_string(c.strategy)} + "[fft=" + bundle_text(c.bundles.fft) +
         ",transpose=" + bundle_text(c.bundles.transpose) + "]";
}

std::vector<Candidate> default_candidates(Extents e, std::size_t workers) {
  std::vector<Candidate> out;
  for (auto s : all_strategies) out.push_back(Candidate{s, {}});
  const std::size_t bundle = std::max<std::size_t>(1, e.rows / (4 * std::max<std::size_t>(1, workers)));
  if (bundle > 1) {
    for (auto s : {StrategyKind::future_naive, StrategyKind::future_opt, StrategyKind::future_sync}) {
      out.push_back(Candidate{s, TaskBundles{bundle, bundle}});
    }
  }
  return out;
}

double estimate_cost(Extents e, const Candidate& c, std::size_t workers, const CostModel& model) {
  validate_extents(e);
  workers = std::max<std::size_t>(1, workers);
  const std::size_t n = e.rows;
  const std::size_t m = e.cols;
  const std::size_t bins = m / 2 + 1;
  const double p = model.cache_penalty;

  const double fft1_row = model.alpha * 5.0 * static_cast<double>(m) * log2d(m) +
                          model.beta * static_cast<double>(m + bins);
  const double fft2_row = model.alpha * 5.0 * static_cast<double>(n) * log2d(n) +
                          model.beta * 2.0 * static_cast<double>(n);
  // Strided reads cost p; strided writes also fetch the line first.
  const double read_contig = model.beta * (1.0 + 2.0 * p);
  const double write_contig = model.beta * (p + 1.0);

  const bool loop = c.strategy == StrategyKind::parallel_loop;
  auto bundle_of = [&](const std::optional<std::size_t>& knob, std::size_t rows) {
    if (knob) return *knob;
    return loop ? ceil_div(rows, workers) : std::size_t{1};
  };
  double task = model.task_overhead;
  if (c.strategy == StrategyKind::future_registry) task += model.lookup_overhead;

  double cost = 0.0;
  switch (c.strategy) {
    case StrategyKind::future_naive: {
      const std::size_t b1 = bundle_of(c.bundles.fft, n);
      const std::size_t b2 = bundle_of(c.bundles.fft, bins);
      cost += phase_path(n, b1, workers, fft1_row + static_cast<double>(bins) * read_contig, 2 * task);
      cost += phase_path(bins, b2, workers, fft2_row + static_cast<double>(n) * read_contig, 2 * task);
      cost += 1 * model.barrier_overhead;
      break;
    }
    case StrategyKind::future_opt: {
      cost += phase_path(n, bundle_of(c.bundles.fft, n), workers, fft1_row, task);
      cost += phase_path(bins, bundle_of(c.bundles.transpose, bins), workers,
                         static_cast<double>(n) * write_contig + fft2_row, 2 * task);
      cost += phase_path(n, bundle_of(c.bundles.transpose, n), workers,
                         static_cast<double>(bins) * write_contig, task);
      cost += 2 * model.barrier_overhead;
      break;
    }
    case StrategyKind::future_sync:
    case StrategyKind::future_registry:
    case StrategyKind::parallel_loop: {
      cost += phase_path(n, bundle_of(c.bundles.fft, n), workers, fft1_row, task);
      cost += phase_path(bins, bundle_of(c.bundles.transpose, bins), workers,
                         static_cast<double>(n) * write_contig, task);
      cost += phase_path(bins, bundle_of(c.bundles.fft, bins), workers, fft2_row, task);
      cost += phase_path(n, bundle_of(c.bundles.transpose, n), workers,
                         static_cast<double>(bins) * write_contig, task);
      cost += 3 * model.barrier_overhead;
      break;
    }
  }
  return cost;
}

Plan2D plan_2d(Extents e, PlanningRigor rigor, FftEngine& engine,
               std::span<const Candidate> candidates, const CostModel& model) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_extents(e);
  if (candidates.empty()) throw ConfigurationError("planning needs at least one candidate");
  for (const auto& c : candidates) ExecConfig{engine.config().workers, c.bundles}.validate();

  Plan2D plan{e,
              rigor,
              candidates.front(),
              engine.plan(e.cols, TransformKind::r2c),
              engine.plan(e.rows, TransformKind::c2c_forward),
              0.0,
              {}};

  std::optional<SignalMatrix> data;
  if (rigor == PlanningRigor::measure) data = scratch(e);

  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CandidateSample s{candidates[i], {}, 0.0};
    if (rigor == PlanningRigor::estimate) {
      s.score = estimate_cost(e, candidates[i], engine.config().workers, model);
    } else {
      for (int run = 0; run < measure_runs; ++run) {
        const auto r0 = std::chrono::steady_clock::now();
        (void)engine.run(*data, candidates[i].strategy, candidates[i].bundles);
        s.seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - r0).count());
      }
      s.score = order_statistics(s.seconds).median;
    }
    if (i > 0 && s.score < plan.samples[best].score) best = i;
    plan.samples.push_back(std::move(s));
  }
  plan.choice = plan.samples[best].candidate;
  plan.planning_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return plan;
}

Plan2D plan_2d(Extents e, PlanningRigor rigor, const ExecConfig& cfg,
               std::span<const Candidate> candidates, const CostModel& model) {
  FftEngine engine{cfg};
  return plan_2d(e, rigor, engine, candidates, model);
}

Fft2dResult execute(FftEngine& engine, const Plan2D& plan, const SignalMatrix& input) {
  if (input.extents() != plan.extents) {
    throw ShapeError("plan for " + to_string(plan.extents) + " used on " +
                     to_string(input.extents()));
  }
  return engine.run(input, plan.choice.strategy, plan.choice.bundles);
}

void write_sample_log(std::ostream& out, const Plan2D& plan) {
  out << "strategy\tfft_bundle\ttranspose_bundle\tscore\tsamples_s\n";
  for (const auto& s : plan.samples) {
    std::ostringstream line;
    line.precision(17);
    line << to_string(s.candidate.strategy) << '\t' << bundle_text(s.candidate.bundles.fft) << '\t'
         << bundle_text(s.candidate.bundles.transpose) << '\t' << s.score << '\t';
    for (std::size_t i = 0; i < s.seconds.size(); ++i) line << (i ? "," : "") << s.seconds[i];
    out << line.str() << '\n';
  }
}

std::vector<CandidateSample> read_sample_log(std::istream& in) {
  std::vector<CandidateSample> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields{line};
    std::string strategy, fft, transpose, score, samples;
    std::getline(fields, strategy, '\t');
    std::getline(fields, fft, '\t');
    std::getline(fields, transpose, '\t');
    std::getline(fields, score, '\t');
    std::getline(fields, samples, '\t');
    const auto kind = parse_strategy(strategy);
    if (!kind) throw ConfigurationError("sample log names unknown strategy '" + strategy + "'");
    CandidateSample s{Candidate{*kind, TaskBundles{parse_bundle(fft), parse_bundle(transpose)}}, {},
                      std::stod(score)};
    std::istringstream values{samples};
    std::string v;
    while (std::getline(values, v, ',')) s.seconds.push_back(std::stod(v));
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<Plan2D> PlanCache::lookup(const PlanKey& key) const {
  std::shared_lock lock{mutex_};
  const auto it = plans_.find(key);
  if (it == plans_.end()) return std::nullopt;
  return it->second;
}

void PlanCache::store(const PlanKey& key, Plan2D plan) {
  std::unique_lock lock{mutex_};
  plans_.insert_or_assign(key, std::move(plan));
}

std::size_t PlanCache::size() const {
  std::shared_lock lock{mutex_};
  return plans_.size();
}

}  // namespace taskfft
