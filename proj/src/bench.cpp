#include "taskfft/bench.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "taskfft/error.hpp"

namespace taskfft {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string{buf, end};
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigurationError("bad number '" + s + "' in CSV");
  }
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigurationError("bad integer '" + s + "' in CSV");
  }
  return v;
}

std::string label(const RunRecord& r) {
  return r.strategy + " " + to_string(r.extents) + " workers=" + std::to_string(r.workers) +
         " n_locs=" + std::to_string(r.n_locs);
}

}  // namespace

SignalMatrix synthetic_input(Extents e, std::uint64_t seed) {
  SignalMatrix m{e};
  Lcg gen{seed};
  for (auto& v : m.data()) v = gen.next_double();
  return m;
}

SpectrumMatrix reference_fft2d(const SignalMatrix& in) {
  const std::size_t n = in.rows();
  const std::size_t bins = in.cols() / 2 + 1;
  SpectrumMatrix rows{Extents{n, bins}};
  for (std::size_t r = 0; r < n; ++r) {
    const auto spec = dft_reference(in.row(r));
    std::copy(spec.begin(), spec.end(), rows.row(r).begin());
  }
  SpectrumMatrix out{Extents{n, bins}};
  std::vector<Complex> column(n);
  for (std::size_t c = 0; c < bins; ++c) {
    for (std::size_t r = 0; r < n; ++r) column[r] = rows(r, c);
    const auto spec = dft_reference(std::span<const Complex>{column});
    for (std::size_t r = 0; r < n; ++r) out(r, c) = spec[r];
  }
  return out;
}

SpectrumCheck::SpectrumCheck(const SignalMatrix& input) {
  if (input.rows() <= oracle_limit && input.cols() <= oracle_limit) {
    oracle_ = reference_fft2d(input);
  }
}

void SpectrumCheck::pin(SpectrumMatrix reference) { agreed_ = std::move(reference); }

SpectrumCheck::Diff SpectrumCheck::compare(const SpectrumMatrix& a, const SpectrumMatrix& ref) {
  Diff d;
  if (a.extents() != ref.extents()) {
    d.max_abs_diff = d.relative = std::numeric_limits<double>::infinity();
    return d;
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a.data()[i] - ref.data()[i]);
    if (!(diff <= d.max_abs_diff)) {
      d.max_abs_diff = diff;
      d.worst = i;
    }
    scale = std::max(scale, std::abs(ref.data()[i]));
  }
  d.relative = scale > 0.0 ? d.max_abs_diff / scale : d.max_abs_diff;
  return d;
}

void SpectrumCheck::check(const SpectrumMatrix& s, const std::string& label) {
  if (oracle_) {
    const Diff d = compare(s, *oracle_);
    if (!(d.relative <= oracle_tolerance)) {
      throw VerificationError(label + ": relative error " + format_double(d.relative) +
                              " against the direct DFT exceeds " + format_double(oracle_tolerance) +
                              " (max abs diff " + format_double(d.max_abs_diff) + " at element " +
                              std::to_string(d.worst) + ")");
    }
  }
  if (!agreed_) {
    if (!oracle_) agreed_ = s;
    return;
  }
  if (s.extents() != agreed_->extents() ||
      std::memcmp(s.data().data(), agreed_->data().data(), s.data().size_bytes()) != 0) {
    const Diff d = compare(s, *agreed_);
    throw VerificationError(label + ": spectrum differs from the reference run (max abs diff " +
                            format_double(d.max_abs_diff) + " at element " +
                            std::to_string(d.worst) + ")");
  }
}

void RunSpec::validate() const {
  validate_extents(extents);
  if (repetitions == 0) throw ConfigurationError("repetitions must be at least 1");
  if (workers.empty()) throw ConfigurationError("worker sweep is empty");
  for (auto w : workers) {
    if (w == 0) throw ConfigurationError("worker counts must be positive");
  }
  if (strategies.empty()) throw ConfigurationError("strategy list is empty");
  if (dist_strategies.empty()) throw ConfigurationError("distributed strategy list is empty");
  if (n_locs.empty()) throw ConfigurationError("locality sweep is empty");
  ExecConfig{1, bundles}.validate();
}

void RunRecord::aggregate() {
  if (repetitions.empty()) throw ConfigurationError("record without repetitions");
  std::vector<double> v(repetitions.size());
  for (std::size_t p = 0; p < phase_count; ++p) {
    for (std::size_t i = 0; i < repetitions.size(); ++i) v[i] = repetitions[i].seconds[p];
    phases[p] = order_statistics(v);
  }
  for (std::size_t i = 0; i < repetitions.size(); ++i) v[i] = repetitions[i].total;
  total = order_statistics(v);
}

std::vector<RunRecord> run_scaling(const RunSpec& spec) {
  spec.validate();
  const SignalMatrix input = synthetic_input(spec.extents, spec.seed);
  SpectrumCheck verifier{input};
  std::vector<RunRecord> out;

  for (const std::size_t w : spec.workers) {
    FftEngine engine{ExecConfig{w, spec.bundles}};
    auto timed = [&](RunRecord rec, StrategyKind s, const TaskBundles& b) {
      rec.extents = spec.extents;
      rec.workers = w;
      rec.strategy = std::string{to_string(s)};
      const std::string what = label(rec);
      rec.repetitions = repeat(spec.repetitions, [&] {
        auto r = engine.run(input, s, b);
        verifier.check(r.spectrum, what);
        return r.timings;
      });
      rec.aggregate();
      out.push_back(std::move(rec));
    };

    if (spec.rigor) {
      std::vector<Candidate> candidates;
      for (auto s : spec.strategies) candidates.push_back(Candidate{s, spec.bundles});
      const Plan2D plan = plan_2d(spec.extents, *spec.rigor, engine, candidates);
      RunRecord rec;
      rec.rigor = std::string{to_string(*spec.rigor)};
      rec.planning_time_s = plan.planning_time;
      timed(std::move(rec), plan.choice.strategy, plan.choice.bundles);
    } else {
      for (auto s : spec.strategies) timed(RunRecord{}, s, spec.bundles);
    }
  }
  return out;
}

std::vector<RunRecord> run_distributed(const RunSpec& spec) {
  spec.validate();
  const SignalMatrix input = synthetic_input(spec.extents, spec.seed);
  SpectrumCheck verifier{input};
  // Distributed output must match shared memory bit for bit at any size.
  verifier.pin(fft2d_r2c(input, StrategyKind::future_sync, ExecConfig{1, {}}).spectrum);
  std::vector<RunRecord> out;

  for (const std::size_t w : spec.workers) {
    for (const std::size_t n : spec.n_locs) {
      for (const DistStrategy ds : spec.dist_strategies) {
        WorldConfig world;
        world.n_locs = n;
        world.transport = spec.transport;
        world.endpoints = spec.endpoints;
        world.workers_per_locality = w;

        RunRecord rec;
        rec.extents = spec.extents;
        rec.strategy = std::string{to_string(ds)};
        rec.workers = w;
        rec.n_locs = n;
        rec.transport = std::string{to_string(spec.transport)};
        const std::string what = label(rec);
        rec.repetitions = repeat(spec.repetitions, [&] {
          const auto r = fft2d_distributed(input, ds, world, ExecConfig{w, spec.bundles});
          verifier.check(r.spectrum, what);
          rec.a2a_bytes_in = r.a2a_bytes_in();
          rec.a2a_bytes_sent = r.a2a_bytes_sent();
          return r.max_timings();
        });
        rec.aggregate();
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

RankRun run_distributed_rank(const RunSpec& spec, Transport& transport) {
  spec.validate();
  const std::size_t w = spec.workers.front();
  const DistStrategy ds = spec.dist_strategies.front();
  Communicator comm{transport};
  FftEngine engine{ExecConfig{w, spec.bundles}};
  const bool root = comm.rank() == Communicator::root;

  SignalMatrix input;
  std::optional<SpectrumCheck> verifier;
  if (root) {
    input = synthetic_input(spec.extents, spec.seed);
    verifier.emplace(input);
    verifier->pin(engine.run(input, StrategyKind::future_sync).spectrum);
  }

  RunRecord rec;
  rec.extents = spec.extents;
  rec.strategy = std::string{to_string(ds)};
  rec.workers = w;
  rec.n_locs = comm.size();
  rec.transport = std::string{to_string(TransportKind::tcp)};
  const std::string what = label(rec) + " rank " + std::to_string(comm.rank());

  RankRun out;
  rec.repetitions = repeat(spec.repetitions, [&] {
    LocalityResult l = run_locality(comm, engine, root ? &input : nullptr, spec.extents, ds);
    const auto all = comm.gather_timings(l.timings);
    // Every rank exchanges blocks of identical extents.
    rec.a2a_bytes_in = l.comm.a2a_bytes_in * comm.size();
    rec.a2a_bytes_sent = l.comm.a2a_bytes_sent * comm.size();
    if (!root) return l.timings;
    verifier->check(l.spectrum, what);
    out.spectrum = std::move(l.spectrum);
    return max_over(all);
  });
  if (root) {
    rec.aggregate();
    out.record = std::move(rec);
  }
  return out;
}

void emit_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  for (std::size_t i = 0; i < csv_columns.size(); ++i) out << (i ? "," : "") << csv_columns[i];
  out << '\n';
  for (const auto& r : records) {
    auto row = [&](const char* phase, const OrderStats& s) {
      out << to_string(r.extents) << ',' << r.strategy << ',' << r.rigor << ',' << r.workers << ','
          << r.n_locs << ',' << r.transport << ',' << phase << ',' << format_double(s.median) << ','
          << format_double(s.min) << ',' << format_double(s.max) << ',' << r.repetitions.size()
          << ',' << format_double(r.planning_time_s) << '\n';
    };
    for (auto p : all_phases) row(to_string(p), r.phases[static_cast<std::size_t>(p)]);
    row("total", r.total);
  }
}

std::vector<CsvRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigurationError("empty CSV");
  std::string expected;
  for (std::size_t i = 0; i < csv_columns.size(); ++i) expected += (i ? "," : "") + std::string{csv_columns[i]};
  if (line != expected) throw ConfigurationError("unexpected CSV header '" + line + "'");

  std::vector<CsvRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields{line};
    std::string cell;
    while (std::getline(fields, cell, ',')) f.push_back(cell);
    if (f.size() != csv_columns.size()) {
      throw ConfigurationError("CSV row has " + std::to_string(f.size()) + " fields: '" + line + "'");
    }
    CsvRow r;
    r.extents = f[0];
    r.strategy = f[1];
    r.rigor = f[2];
    r.workers = parse_size(f[3]);
    r.n_locs = parse_size(f[4]);
    r.transport = f[5];
    r.phase = f[6];
    r.median_s = parse_double(f[7]);
    r.min_s = parse_double(f[8]);
    r.max_s = parse_double(f[9]);
    r.repetitions = parse_size(f[10]);
    r.planning_time_s = parse_double(f[11]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_metadata(std::ostream& out, const RunSpec& spec, const std::vector<RunRecord>& records) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["extents"] = to_string(spec.extents);
  j["seed"] = spec.seed;
  j["generator"] = {{"kind", "lcg64"},
                    {"multiplier", "6364136223846793005"},
                    {"increment", "1442695040888963407"},
                    {"mapping", "high 53 bits / 2^53, row-major"}};
  j["repetitions"] = spec.repetitions;
  j["warmup_runs"] = 1;
  j["process_model"] = "one process per sweep point; repetitions share it";
  j["median_convention"] = "even count: mean of the two central values";
  j["correctness_check"] = spec.extents.rows <= oracle_limit && spec.extents.cols <= oracle_limit
                               ? "direct DFT, relative max-abs error <= 1e-10"
                               : "bitwise agreement across runs";
  j["workers"] = spec.workers;
  j["n_locs"] = spec.n_locs;
  j["transport"] = std::string{to_string(spec.transport)};
  j["hardware_concurrency"] = std::thread::hardware_concurrency();
  ordered_json recs = ordered_json::array();
  for (const auto& r : records) {
    ordered_json x;
    x["strategy"] = r.strategy;
    x["rigor"] = r.rigor;
    x["workers"] = r.workers;
    x["n_locs"] = r.n_locs;
    x["transport"] = r.transport;
    x["total_median_s"] = r.total.median;
    x["planning_time_s"] = r.planning_time_s;
    if (r.n_locs > 1) {
      x["a2a_bytes_in"] = r.a2a_bytes_in;
      x["a2a_bytes_sent"] = r.a2a_bytes_sent;
    }
    recs.push_back(std::move(x));
  }
  j["records"] = std::move(recs);
  out << j.dump(2) << '\n';
}

}  // namespace taskfft
