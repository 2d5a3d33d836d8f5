#include <doctest.h>

#include "oracle.hpp"
#include "taskfft/error.hpp"
#include "taskfft/exec.hpp"

using namespace taskfft;
using taskfft::testing::bitwise_equal;
using taskfft::testing::brute_force_dft2d;
using taskfft::testing::random_signal;
using taskfft::testing::relative_error;

namespace {

std::uint64_t last_end(const EventTrace& t, Phase p) { return t.last_end(p).value(); }

}  // namespace

TEST_SUITE("exec") {

TEST_CASE("strategy names round-trip") {
  for (auto s : all_strategies) CHECK(parse_strategy(to_string(s)) == s);
  CHECK_FALSE(parse_strategy("future_magic").has_value());
}

TEST_CASE("zero and constant inputs for every strategy") {
  FftEngine engine{ExecConfig{2, {}}};
  for (auto s : all_strategies) {
    CAPTURE(to_string(s));
    const auto zero = engine.run(SignalMatrix{Extents{4, 4}, 0.0}, s);
    CHECK(zero.spectrum.extents() == Extents{4, 3});
    for (const auto& v : zero.spectrum.data()) CHECK(v == Complex{0.0, 0.0});

    const auto ones = engine.run(SignalMatrix{Extents{4, 4}, 1.0}, s);
    CHECK(std::abs(ones.spectrum(0, 0) - Complex{16.0, 0.0}) <= 1e-12);
    for (std::size_t i = 1; i < ones.spectrum.size(); ++i) {
      CHECK(std::abs(ones.spectrum.data()[i]) <= 1e-12);
    }
  }
}

TEST_CASE("16x16 matches the brute-force 2D DFT") {
  const auto in = random_signal(Extents{16, 16}, 77);
  const auto ref = brute_force_dft2d(in);
  FftEngine engine{ExecConfig{3, {}}};
  for (auto s : all_strategies) {
    CAPTURE(to_string(s));
    const auto out = engine.run(in, s);
    CHECK(relative_error(out.spectrum.data(), ref.data()) <= 1e-10);
  }
  // Non-square.
  const auto wide = random_signal(Extents{4, 32}, 5);
  const auto ref_wide = brute_force_dft2d(wide);
  CHECK(relative_error(engine.run(wide, StrategyKind::future_opt).spectrum.data(),
                       ref_wide.data()) <= 1e-10);
}

TEST_CASE("invalid extents are rejected") {
  FftEngine engine{ExecConfig{1, {}}};
  CHECK_THROWS_AS(engine.run(SignalMatrix{Extents{6, 4}}, StrategyKind::future_sync),
                  InvalidSizeError);
  CHECK_THROWS_AS(engine.run(SignalMatrix{Extents{1, 4}}, StrategyKind::future_opt),
                  InvalidSizeError);
  CHECK_THROWS_AS(FftEngine(ExecConfig{0, {}}), ConfigurationError);
  CHECK_THROWS_AS(FftEngine(ExecConfig{1, {std::size_t{0}, {}}}), ConfigurationError);
}

TEST_CASE("property: strategies and worker counts agree bitwise") {
  for (std::size_t workers : {1, 2, 4, 8}) {
    FftEngine engine{ExecConfig{workers, {}}};
    for (std::size_t n : {4, 8, 16, 32, 64}) {
      for (std::size_t m : {4, 8, 16, 32, 64}) {
        for (std::uint64_t seed = 0; seed < 2; ++seed) {
          const auto in = random_signal(Extents{n, m}, seed * 1000 + n * 64 + m);
          const auto ref = fft2d_r2c(in, StrategyKind::future_sync, ExecConfig{1, {}});
          for (auto s : all_strategies) {
            CAPTURE(workers);
            CAPTURE(n);
            CAPTURE(m);
            CAPTURE(to_string(s));
            CHECK(bitwise_equal(engine.run(in, s).spectrum, ref.spectrum));
          }
        }
      }
    }
  }
}

TEST_CASE("bundles do not change the result") {
  const auto in = random_signal(Extents{32, 16}, 9);
  const auto ref = fft2d_r2c(in, StrategyKind::future_sync, ExecConfig{1, {}});
  FftEngine engine{ExecConfig{3, {}}};
  for (std::size_t fb : {1, 3, 8, 64}) {
    for (std::size_t tb : {1, 5, 32}) {
      for (auto s : all_strategies) {
        CHECK(bitwise_equal(engine.run(in, s, TaskBundles{fb, tb}).spectrum, ref.spectrum));
      }
    }
  }
}

TEST_CASE("naive overlaps transposes with the first FFT phase") {
  const auto in = random_signal(Extents{16, 16}, 1);
  for (std::size_t workers : {2, 4}) {
    EventTrace trace;
    FftEngine engine{ExecConfig{workers, {}}};
    (void)engine.run(in, StrategyKind::future_naive, &trace);
    CHECK(trace.count(Phase::fft_dim1) == 16);
    CHECK(trace.count(Phase::transpose_1) == 16);
    CHECK(trace.begun_before(Phase::transpose_1, last_end(trace, Phase::fft_dim1)) >= 1);
    // Single barrier before FFT-dim2.
    CHECK(trace.begun_before(Phase::fft_dim2, last_end(trace, Phase::transpose_1)) == 0);
    CHECK(trace.barriers().size() == 1);
  }
  // One worker still completes, unchanged.
  const auto one = fft2d_r2c(in, StrategyKind::future_naive, ExecConfig{1, {}});
  const auto ref = fft2d_r2c(in, StrategyKind::future_sync, ExecConfig{1, {}});
  CHECK(bitwise_equal(one.spectrum, ref.spectrum));
}

TEST_CASE("opt places a barrier between FFT-dim1 and the transpose") {
  const auto in = random_signal(Extents{32, 32}, 2);
  EventTrace trace;
  FftEngine engine{ExecConfig{4, {}}};
  const auto opt = engine.run(in, StrategyKind::future_opt, &trace);
  CHECK(trace.begun_before(Phase::transpose_1, last_end(trace, Phase::fft_dim1)) == 0);
  CHECK(trace.begun_before(Phase::transpose_2, last_end(trace, Phase::fft_dim2)) == 0);
  CHECK(trace.barriers().size() == 2);
  // FFT-dim2 of a row never starts before the transpose task that wrote it.
  const auto t1 = trace.events(Phase::transpose_1);
  for (const auto& e : trace.events(Phase::fft_dim2)) {
    for (const auto& t : t1) {
      if (t.task == e.task) CHECK(t.end < e.begin);
    }
  }
  const auto naive = engine.run(in, StrategyKind::future_naive);
  CHECK(bitwise_equal(opt.spectrum, naive.spectrum));
}

TEST_CASE("sync, registry and loop separate every phase") {
  const auto in = random_signal(Extents{16, 16}, 3);
  FftEngine engine{ExecConfig{4, {}}};
  for (auto s : {StrategyKind::future_sync, StrategyKind::future_registry,
                 StrategyKind::parallel_loop}) {
    CAPTURE(to_string(s));
    EventTrace trace;
    const auto r = engine.run(in, s, &trace);
    CHECK(trace.barriers().size() == 3);
    CHECK(trace.begun_before(Phase::transpose_1, last_end(trace, Phase::fft_dim1)) == 0);
    CHECK(trace.begun_before(Phase::fft_dim2, last_end(trace, Phase::transpose_1)) == 0);
    CHECK(trace.begun_before(Phase::transpose_2, last_end(trace, Phase::fft_dim2)) == 0);
    if (s == StrategyKind::future_registry) {
      CHECK(r.registry_lookups == r.tasks);
      CHECK(r.tasks == 16 + 9 + 9 + 16);
    } else {
      CHECK(r.registry_lookups == 0);
    }
  }
}

TEST_CASE("parallel_loop bundles rows/workers rounded up by default") {
  CHECK(loop_chunk_size(16, 3, std::nullopt) == 6);
  CHECK(loop_chunk_size(9, 4, std::nullopt) == 3);
  CHECK(loop_chunk_size(2, 8, std::nullopt) == 1);
  CHECK(loop_chunk_size(16, 3, std::size_t{5}) == 5);

  EventTrace trace;
  FftEngine engine{ExecConfig{3, {}}};
  const auto r = engine.run(random_signal(Extents{16, 16}, 4), StrategyKind::parallel_loop, &trace);
  // 16 rows -> chunks of 6: 3 tasks; 9 rows -> chunks of 3: 3 tasks.
  CHECK(trace.count(Phase::fft_dim1) == 3);
  CHECK(trace.count(Phase::transpose_1) == 3);
  CHECK(r.tasks == 12);
}

TEST_CASE("registry resolves names and rejects unknown ones") {
  TaskRegistry reg;
  int hits = 0;
  reg.add("a", [&](RowRange r) { hits += static_cast<int>(r.size()); });
  reg.lookup("a")(RowRange{0, 3});
  CHECK(hits == 3);
  CHECK(reg.contains("a"));
  CHECK_FALSE(reg.contains("b"));
  CHECK_THROWS_AS((void)reg.lookup("b"), RegistryError);
  CHECK(reg.lookup_count() == 2);
}

TEST_CASE("phase timings are non-negative and bounded by the total") {
  const auto in = random_signal(Extents{64, 64}, 5);
  FftEngine engine{ExecConfig{2, {}}};
  for (auto s : all_strategies) {
    const auto r = engine.run(in, s);
    for (double v : r.timings.seconds) CHECK(v >= 0.0);
    CHECK(r.timings[Phase::communicate] == 0.0);
    CHECK(r.timings[Phase::rearrange] == 0.0);
    CHECK(r.timings.phase_sum() <= 1.05 * r.timings.total);
    CHECK(r.timings.total > 0.0);
  }
}

TEST_CASE("pipeline executions are counted") {
  const auto before = pipeline_executions();
  (void)fft2d_r2c(SignalMatrix{Extents{4, 4}}, StrategyKind::parallel_loop, ExecConfig{1, {}});
  CHECK(pipeline_executions() == before + 1);
}

}  // TEST_SUITE
