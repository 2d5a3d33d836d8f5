// Acceptance run: one PASS/FAIL line per criterion, WARN for the soft one.
// Exit status is non-zero if any hard criterion fails.

#include <spawn.h>
#include <unistd.h>
#include <sys/wait.h>

#include <bit>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "golden_records.hpp"
#include "oracle.hpp"
#include "taskfft/bench.hpp"
#include "taskfft/error.hpp"
#include "taskfft/wire.hpp"

extern char** environ;

using namespace taskfft;
using namespace taskfft::testing;

namespace {

enum class Verdict { pass, fail, warn };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

Outcome outcome(bool ok, std::string detail) {
  return {ok ? Verdict::pass : Verdict::fail, std::move(detail)};
}

// 1. Every strategy against the brute-force 2D DFT.
Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t runs = 0;
  std::vector<FftEngine> engines;
  for (std::size_t n = 4; n <= 64; n *= 2) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const auto in = random_signal(Extents{n, n}, 1000 * n + seed);
      const auto ref = brute_force_dft2d(in);
      FftEngine engine{ExecConfig{1 + seed % 4, {}}};
      for (auto s : all_strategies) {
        worst = std::max(worst, relative_error(engine.run(in, s).spectrum.data(), ref.data()));
        ++runs;
      }
    }
  }
  const double secs = since(t0);
  return outcome(worst <= 1e-10 && secs < 30.0,
                 "max relative error " + fmt(worst) + " over " + std::to_string(runs) +
                     " runs, " + fmt(secs) + " s (limits 1e-10, 30 s)");
}

// 2. Shared and distributed strategies, bitwise.
Outcome strategy_agreement() {
  const auto t0 = Clock::now();
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  std::vector<std::unique_ptr<FftEngine>> engines;
  for (std::size_t w : {1, 2, 4}) engines.push_back(std::make_unique<FftEngine>(ExecConfig{w, {}}));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto in = random_signal(Extents{64, 64}, 2000 + seed);
    const auto ref = engines[0]->run(in, StrategyKind::future_sync).spectrum;
    auto tally = [&](const SpectrumMatrix& s) {
      ++compared;
      if (!bitwise_equal(s, ref)) ++mismatches;
    };
    for (std::size_t wi = 0; wi < engines.size(); ++wi) {
      for (auto s : all_strategies) tally(engines[wi]->run(in, s).spectrum);
      const std::size_t w = engines[wi]->config().workers;
      for (std::size_t n : {1, 2, 4}) {
        for (auto ds : all_dist_strategies) {
          WorldConfig world{n, TransportKind::in_process, {}, w};
          tally(fft2d_distributed(in, ds, world, ExecConfig{w, {}}).spectrum);
        }
      }
    }
  }
  const double secs = since(t0);
  return outcome(mismatches == 0 && secs < 60.0,
                 std::to_string(mismatches) + " of " + std::to_string(compared) +
                     " spectra differ, " + fmt(secs) + " s (limit 60 s)");
}

// 3. Parseval, linearity, Hermitian symmetry and round-trip.
Outcome kernel_properties() {
  double parseval = 0.0, linear = 0.0, hermitian = 0.0, round = 0.0;
  for (std::size_t n = 2; n <= 4096; n *= 2) {
    const auto fwd = plan_1d(n, TransformKind::c2c_forward);
    const auto inv = plan_1d(n, TransformKind::c2c_inverse);
    const auto r2c = plan_1d(n, TransformKind::r2c);
    const double nd = static_cast<double>(n);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto x = random_complex(n, 3000 + seed);
      const auto y = random_complex(n, 4000 + seed);
      const auto fx = execute_c2c(fwd, x);
      const auto fy = execute_c2c(fwd, y);

      double et = 0.0, ef = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        et += std::norm(x[i]);
        ef += std::norm(fx[i]);
      }
      parseval = std::max(parseval, std::abs(et - ef / nd) / et);

      const Complex a{0.7, -1.3}, b{2.1, 0.4};
      std::vector<Complex> mix(n), expect(n);
      for (std::size_t i = 0; i < n; ++i) {
        mix[i] = a * x[i] + b * y[i];
        expect[i] = a * fx[i] + b * fy[i];
      }
      linear = std::max(linear, relative_error(execute_c2c(fwd, mix), expect));

      const auto back = execute_c2c_inverse(inv, fx);
      std::vector<Complex> scaled(n);
      for (std::size_t i = 0; i < n; ++i) scaled[i] = back[i] / nd;
      round = std::max(round, relative_error(scaled, x));

      const auto real = random_real(n, 5000 + seed);
      std::vector<Complex> as_complex(real.begin(), real.end());
      const auto full = execute_c2c(fwd, as_complex);
      const auto half = execute_r2c(r2c, real);
      std::vector<Complex> mirrored(n);
      for (std::size_t k = 0; k < n; ++k) mirrored[k] = std::conj(full[(n - k) % n]);
      hermitian = std::max(hermitian, relative_error(mirrored, full));
      hermitian = std::max(
          hermitian, relative_error(half, std::span<const Complex>{full}.first(n / 2 + 1)));
    }
  }
  const double worst = std::max({parseval, linear, hermitian, round});
  return outcome(worst <= 1e-10, "N = 2..4096, 10 seeds: parseval " + fmt(parseval) +
                                     ", linearity " + fmt(linear) + ", hermitian " +
                                     fmt(hermitian) + ", round-trip " + fmt(round) +
                                     " (limit 1e-10)");
}

// 4. All-to-all byte accounting and bitwise output.
Outcome communication_accounting() {
  const auto in = random_signal(Extents{64, 64}, 6000);
  const auto ref = fft2d_r2c(in, StrategyKind::future_sync, ExecConfig{1, {}}).spectrum;
  bool ok = true;
  std::string detail;
  for (std::size_t n : {2, 4, 8}) {
    for (auto ds : all_dist_strategies) {
      const auto r = fft2d_distributed(in, ds, WorldConfig{n, TransportKind::in_process, {}, 1},
                                       ExecConfig{1, {}});
      std::uint64_t wire = 0;
      for (const auto& l : r.localities) wire += l.comm.a2a_bytes_sent;
      const bool exact = r.a2a_bytes_sent() * n == r.a2a_bytes_in() * (n - 1) && wire == r.a2a_bytes_sent();
      const bool same = bitwise_equal(r.spectrum, ref);
      ok = ok && exact && same;
      if (ds == DistStrategy::futurized) {
        detail += (detail.empty() ? "" : "; ") + std::string{"n="} + std::to_string(n) + " sent " +
                  std::to_string(r.a2a_bytes_sent()) + "/" + std::to_string(r.a2a_bytes_in());
      }
      if (!exact || !same) {
        detail += " [" + std::string{to_string(ds)} + " n=" + std::to_string(n) +
                  (exact ? "" : " byte count off") + (same ? "" : " spectrum differs") + "]";
      }
    }
  }
  return outcome(ok, detail);
}

int spawn(const std::vector<std::string>& args, pid_t& pid) {
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  return posix_spawn(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
}

std::vector<char> read_file(const std::string& path) {
  std::ifstream f{path, std::ios::binary};
  return {std::istreambuf_iterator<char>{f}, std::istreambuf_iterator<char>{}};
}

// 5. Two fft_bench processes over loopback TCP, and wire framing fuzz.
Outcome transport_equivalence() {
  const Extents e{256, 256};
  const std::string dir = std::filesystem::temp_directory_path().string();
  const std::string tag = std::to_string(::getpid());
  const std::string tcp_out = dir + "/taskfft_accept_tcp_" + tag + ".bin";

  std::string peers;
  {
    TcpListener a{Endpoint{"127.0.0.1", 0}};
    TcpListener b{Endpoint{"127.0.0.1", 0}};
    peers = "127.0.0.1:" + std::to_string(a.port()) + ",127.0.0.1:" + std::to_string(b.port());
  }
  auto args = [&](int rank) {
    std::vector<std::string> a{TASKFFT_FFT_BENCH, "--rows", "256", "--cols", "256", "--reps", "1",
                               "--seed", "7", "--strategy", "futurized_dist", "--transport", "tcp",
                               "--rank", std::to_string(rank), "--peers", peers,
                               "--connect-timeout", "20", "--out", "/dev/null"};
    if (rank == 0) {
      a.push_back("--spectrum-out");
      a.push_back(tcp_out);
    }
    return a;
  };
  pid_t p0 = 0, p1 = 0;
  int status0 = -1, status1 = -1;
  if (spawn(args(1), p1) == 0) {
    if (spawn(args(0), p0) == 0) waitpid(p0, &status0, 0);
    waitpid(p1, &status1, 0);
  }
  const bool exited = status0 == 0 && status1 == 0;

  const auto in = synthetic_input(e, 7);
  const auto local = fft2d_distributed(in, DistStrategy::futurized,
                                       WorldConfig{2, TransportKind::in_process, {}, 1},
                                       ExecConfig{1, {}})
                         .spectrum;
  std::vector<char> expected(local.data().size_bytes());
  encode_payload(local.data(), std::as_writable_bytes(std::span{expected}));
  const auto got = read_file(tcp_out);
  std::remove(tcp_out.c_str());
  const bool same = exited && got == expected;

  std::size_t frames = 0, bad = 0;
  Lcg gen{8};
  for (int i = 0; i < 2000; ++i) {
    WireMessage m;
    m.tag = CollectiveTag{gen.next_u64(), static_cast<CollectiveKind>(gen.next_u64() % 4)};
    m.source = LocalityId{static_cast<std::uint32_t>(gen.next_u64())};
    m.payload.resize(gen.next_u64() % 64);
    for (auto& c : m.payload) {
      const std::uint64_t re = gen.next_u64(), im = gen.next_u64();
      c = Complex{std::bit_cast<double>(re), std::bit_cast<double>(im)};
    }
    const auto bytes = encode(m);
    const auto back = decode(bytes);
    ++frames;
    const bool equal = back.tag.generation == m.tag.generation && back.tag.kind == m.tag.kind &&
                       back.source == m.source && back.payload.size() == m.payload.size() &&
                       std::memcmp(back.payload.data(), m.payload.data(),
                                   m.payload.size() * sizeof(Complex)) == 0;
    if (!equal) ++bad;
  }
  return outcome(same && bad == 0,
                 std::string{"tcp 2-process 256x256 "} +
                     (!exited ? "processes failed" : same ? "bitwise equal" : "differs") +
                     " to in-process; wire fuzz " + std::to_string(bad) + " of " +
                     std::to_string(frames) + " frames changed");
}

// 6. Event-trace barrier placement.
Outcome barrier_discipline() {
  const auto in = random_signal(Extents{128, 128}, 7000);
  std::string failures;
  std::size_t naive_overlap_min = SIZE_MAX;
  for (int run = 0; run < 10; ++run) {
    for (std::size_t w : {2, 4}) {
      FftEngine engine{ExecConfig{w, {}}};
      for (auto s : all_strategies) {
        EventTrace trace;
        (void)engine.run(in, s, &trace);
        const auto end1 = trace.last_end(Phase::fft_dim1);
        if (!end1) {
          failures += " " + std::string{to_string(s)} + ":no-trace";
          continue;
        }
        const std::size_t overlap = trace.begun_before(Phase::transpose_1, *end1);
        if (s == StrategyKind::future_naive) {
          naive_overlap_min = std::min(naive_overlap_min, overlap);
          if (overlap == 0) failures += " naive:no-overlap(w=" + std::to_string(w) + ")";
        } else if (overlap != 0) {
          failures += " " + std::string{to_string(s)} + ":overlap(w=" + std::to_string(w) + ")";
        }
      }
    }
  }
  return outcome(failures.empty(),
                 "10 runs of 128x128 on 2 and 4 workers; naive overlap >= " +
                     std::to_string(naive_overlap_min) + " tasks, others 0" +
                     (failures.empty() ? "" : ";" + failures));
}

// 7. Order statistics on injected timings and the CSV golden file.
Outcome statistics_protocol() {
  Lcg gen{9};
  std::size_t mismatches = 0;
  for (std::size_t reps = 1; reps <= 50; ++reps) {
    RunRecord r;
    std::vector<std::vector<double>> cols(phase_count + 1);
    for (std::size_t i = 0; i < reps; ++i) {
      PhaseTimings t;
      for (std::size_t p = 0; p < phase_count; ++p) {
        t.seconds[p] = gen.next_double();
        cols[p].push_back(t.seconds[p]);
      }
      t.total = gen.next_double() * 10;
      cols[phase_count].push_back(t.total);
      r.repetitions.push_back(t);
    }
    r.aggregate();
    for (std::size_t p = 0; p <= phase_count; ++p) {
      const OrderStats& s = p < phase_count ? r.phases[p] : r.total;
      auto sorted = cols[p];
      std::sort(sorted.begin(), sorted.end());
      if (s.median != sorted_median(cols[p]) || s.min != sorted.front() || s.max != sorted.back()) {
        ++mismatches;
      }
    }
  }
  const bool even = order_statistics(std::vector<double>{4, 1, 3, 2}).median == 2.5;

  std::stringstream csv;
  emit_csv(csv, injected_records());
  std::ifstream golden{std::string{TASKFFT_GOLDEN_DIR} + "/bench_schema.csv"};
  std::stringstream expected;
  expected << golden.rdbuf();
  const bool stable = csv.str() == expected.str();
  return outcome(mismatches == 0 && even && stable,
                 "R = 1..50: " + std::to_string(mismatches) + " mismatches; even-R median " +
                     (even ? "ok" : "wrong") + "; golden CSV " + (stable ? "stable" : "changed"));
}

// 8. Planner: estimate runs nothing, measure picks the minimum, output is plan-independent.
Outcome planner_contract() {
  const Extents e{128, 128};
  FftEngine engine{ExecConfig{2, {}}};
  const auto cands = default_candidates(e, 2);
  const auto before = pipeline_executions();
  const auto est = plan_2d(e, PlanningRigor::estimate, engine, cands);
  const auto est_runs = pipeline_executions() - before;

  const auto mea = plan_2d(e, PlanningRigor::measure, engine, cands);
  double chosen = -1.0, lowest = 1e300;
  for (const auto& s : mea.samples) {
    lowest = std::min(lowest, s.score);
    if (s.candidate == mea.choice && chosen < 0) chosen = s.score;
  }
  const bool minimal = chosen == lowest;

  const auto in = random_signal(e, 8000);
  const bool same = bitwise_equal(execute(engine, est, in).spectrum, execute(engine, mea, in).spectrum);
  return outcome(est_runs == 0 && minimal && same,
                 "estimate ran " + std::to_string(est_runs) + " pipelines; measure chose " +
                     to_string(mea.choice) + " at " + fmt(chosen) + " s (min " + fmt(lowest) +
                     "); outputs " + (same ? "bitwise equal" : "differ"));
}

// 9. Soft: parallel_loop speed-up at 4 workers.
Outcome performance_sanity() {
  const unsigned cores = std::thread::hardware_concurrency();
  RunSpec spec;
  spec.extents = Extents{1024, 1024};
  spec.repetitions = 10;
  spec.workers = {1, 4};
  spec.strategies = {StrategyKind::parallel_loop};
  const auto recs = run_scaling(spec);
  const double speedup = recs[0].total.median / recs[1].total.median;
  std::string detail = "parallel_loop 1024x1024 R=10: median " + fmt(recs[0].total.median) +
                       " s at 1 worker, " + fmt(recs[1].total.median) + " s at 4, speed-up " +
                       fmt(speedup) + " (target 1.5) on " + std::to_string(cores) + " cores";
  if (cores < 4) return {Verdict::warn, detail + "; fewer than 4 cores, not assessable"};
  return {speedup >= 1.5 ? Verdict::pass : Verdict::warn, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"strategy agreement", strategy_agreement},
      {"kernel properties", kernel_properties},
      {"communication accounting", communication_accounting},
      {"transport equivalence", transport_equivalence},
      {"barrier discipline", barrier_discipline},
      {"statistics protocol", statistics_protocol},
      {"planner contract", planner_contract},
      {"performance sanity", performance_sanity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string{"error: "} + e.what()};
    }
    const char* verdict = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "WARN";
    if (o.verdict == Verdict::fail) ++failed;
    std::cout << "criterion " << i + 1 << " " << verdict << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (failed ? "acceptance FAILED (" + std::to_string(failed) + ")" : std::string{"acceptance PASSED"})
            << std::endl;
  return failed ? 1 : 0;
}
