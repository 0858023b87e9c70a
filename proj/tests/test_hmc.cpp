#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "veritas/errors.hpp"
#include "veritas/hmc.hpp"

using namespace veritas;
using testutil::make_metric;
using testutil::make_run;
using testutil::make_sample;

namespace {

SessionRecord session_with(std::vector<RunRecord> runs, EnvironmentFingerprint env) {
  auto s = SessionRecord::create("00112233445566778899aabbccddeeff",
                                 Timestamp::parse_seconds("2026-01-02T03:04:05Z"), env.tier, env);
  for (auto& r : runs) s.append_run(std::move(r));
  return s;
}

}  // namespace

TEST_CASE("empty session is rejected") {
  auto s = SessionRecord::create("00112233445566778899aabbccddeeff",
                                 Timestamp::parse_seconds("2026-01-02T03:04:05Z"), Tier::minimal,
                                 testutil::minimal_env());
  CHECK_THROWS_WITH_AS(evaluate_hmc(s), doctest::Contains("empty-session"), Error);
}

TEST_CASE("single sub-second metric run: ZERO_COST_METRIC, 0.80, PASS") {
  // A healthy 6 s run linked with a 0.3 s metric-emitting run: one flag,
  // one 0.20 penalty.
  auto healthy = make_run(0, 1767323045000, 6000, {make_metric("loss", "1.065107")}, 5500);
  auto fake = make_run(1, 1767323060000, 300, {make_metric("val_accuracy", "0.99")}, 0);
  auto s = session_with({std::move(healthy), std::move(fake)}, testutil::minimal_env());

  const HmcReport report = evaluate_hmc(s);
  REQUIRE(report.flags.size() == 1);
  CHECK(report.flags[0].code == HmcFlagCode::zero_cost_metric);
  CHECK(report.flags[0].run_index == 1);
  CHECK(report.score_centi == 80);
  CHECK(report.score_string() == "0.80");
  CHECK(report.pass());
  CHECK(std::string(report.verdict()) == "PASS");
}

TEST_CASE("low-CPU metric run is zero-cost even when wall time is long") {
  // Printing a metric after sleeping: wall 6 s but 20 ms of CPU.
  auto r = make_run(0, 1767323045000, 6000, {make_metric("acc", "0.9")}, 20);
  auto s = session_with({std::move(r)}, testutil::minimal_env());
  const HmcReport report = evaluate_hmc(s);
  REQUIRE(report.flags.size() == 1);
  CHECK(report.flags[0].code == HmcFlagCode::zero_cost_metric);
  CHECK(report.score_centi == 80);
}

TEST_CASE("clean long run scores exactly 1.00 with no flags") {
  auto r = make_run(0, 1767323045000, 65000, {make_metric("loss", "0.27")}, 60000);
  auto s = session_with({std::move(r)}, testutil::minimal_env());
  const HmcReport report = evaluate_hmc(s);
  CHECK(report.flags.empty());
  CHECK(report.score_centi == 100);
  CHECK(report.score_string() == "1.00");
  CHECK(report.pass());
}

TEST_CASE("runs without metrics never raise metric flags") {
  auto r = make_run(0, 1767323045000, 300, {}, 0);  // sub-second, no metrics
  auto s = session_with({std::move(r)}, testutil::minimal_env());
  const HmcReport report = evaluate_hmc(s);
  CHECK(report.flags.empty());
  CHECK(report.score_centi == 100);
}

TEST_CASE("NO_TELEMETRY: one run 0.60 PASS, two runs 0.20 FAIL") {
  auto no_trace = [](std::uint32_t index, std::int64_t start) {
    auto r = make_run(index, start, 10000, {make_metric("m", "1.0")}, 0);
    r.telemetry.samples.clear();
    return r;
  };
  auto one = session_with({no_trace(0, 1767323045000)}, testutil::minimal_env());
  const HmcReport r1 = evaluate_hmc(one);
  REQUIRE(r1.flags.size() == 1);
  CHECK(r1.flags[0].code == HmcFlagCode::no_telemetry);
  CHECK(r1.score_centi == 60);
  CHECK(r1.pass());  // pass by threshold

  auto two = session_with({no_trace(0, 1767323045000), no_trace(1, 1767323060000)},
                          testutil::minimal_env());
  const HmcReport r2 = evaluate_hmc(two);
  CHECK(r2.score_centi == 20);
  CHECK_FALSE(r2.pass());
  CHECK(std::string(r2.verdict()) == "FAIL");
}

TEST_CASE("GPU_CLAIM_INACTIVE: claimed accelerator with no observed activity") {
  // 90 s run, metrics, full-tier fingerprint claiming a GPU, zero GPU
  // samples anywhere in the trace.
  auto r = make_run(0, 1767323045000, 90000, {make_metric("acc", "0.99")}, 89000);
  auto s = session_with({std::move(r)}, testutil::full_env("NVIDIA Test GPU"));
  const HmcReport report = evaluate_hmc(s);
  REQUIRE(report.flags.size() == 1);
  CHECK(report.flags[0].code == HmcFlagCode::gpu_claim_inactive);
  CHECK(report.score_centi == 70);

  // Same run with visible GPU activity: clean.
  auto active = make_run(0, 1767323045000, 90000, {make_metric("acc", "0.99")}, 89000);
  for (auto& sample : active.telemetry.samples) {
    sample.gpu_util_pct = 85;
    sample.gpu_mem_bytes = 4ull << 30;
  }
  auto s2 = session_with({std::move(active)}, testutil::full_env("NVIDIA Test GPU"));
  CHECK(evaluate_hmc(s2).score_centi == 100);

  // No GPU claimed (empty model string): the check never applies.
  auto idle = make_run(0, 1767323045000, 90000, {make_metric("acc", "0.99")}, 89000);
  auto s3 = session_with({std::move(idle)}, testutil::full_env(""));
  CHECK(evaluate_hmc(s3).score_centi == 100);

  // Short runs are exempt from the GPU check.
  auto brief = make_run(0, 1767323045000, 30000, {make_metric("acc", "0.99")}, 29000);
  auto s4 = session_with({std::move(brief)}, testutil::full_env("NVIDIA Test GPU"));
  CHECK(evaluate_hmc(s4).score_centi == 100);
}

TEST_CASE("COUNTER_ANOMALY on decreasing cumulative counters") {
  auto r = make_run(0, 1767323045000, 5000, {make_metric("m", "1.0")}, 4500);
  REQUIRE(r.telemetry.samples.size() >= 3);
  r.telemetry.samples[2].cpu_time_ms = r.telemetry.samples[1].cpu_time_ms - 100;
  auto s = session_with({std::move(r)}, testutil::minimal_env());
  const HmcReport report = evaluate_hmc(s);
  REQUIRE(report.flags.size() == 1);
  CHECK(report.flags[0].code == HmcFlagCode::counter_anomaly);
  CHECK(report.score_centi == 90);
}

TEST_CASE("score clamps at zero") {
  std::vector<RunRecord> runs;
  for (std::uint32_t i = 0; i < 4; ++i) {
    auto r = make_run(i, 1767323045000 + i * 20000, 10000, {make_metric("m", "1.0")}, 0);
    r.telemetry.samples.clear();  // NO_TELEMETRY (0.40 each)
    runs.push_back(std::move(r));
  }
  auto s = session_with(std::move(runs), testutil::minimal_env());
  const HmcReport report = evaluate_hmc(s);
  CHECK(report.score_centi == 0);
  CHECK(report.score_string() == "0.00");
  CHECK_FALSE(report.pass());
}

TEST_CASE("evaluate_hmc is pure and monotone under added flagged runs") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RunRecord> runs;
    const std::uint32_t n = 1 + rng() % 3;
    std::int64_t start = 1767323045000;
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::int64_t wall = 200 + static_cast<std::int64_t>(rng() % 8000);
      const std::int64_t cpu = static_cast<std::int64_t>(rng() % (wall + 1));
      std::vector<MetricRecord> metrics;
      if (rng() % 2) metrics.push_back(make_metric("m", "1.0"));
      runs.push_back(make_run(i, start, wall, std::move(metrics), cpu));
      start += wall + 1000;
    }
    auto s = session_with(runs, testutil::minimal_env());
    const HmcReport a = evaluate_hmc(s);
    const HmcReport b = evaluate_hmc(s);
    CHECK(a == b);
    CHECK(a.score_centi >= 0);
    CHECK(a.score_centi <= 100);

    // Adding a zero-cost run never raises the score.
    auto worse_runs = runs;
    worse_runs.push_back(
        make_run(n, start, 300, {make_metric("late", "0.5")}, 0));
    auto worse = session_with(std::move(worse_runs), testutil::minimal_env());
    CHECK(evaluate_hmc(worse).score_centi <= a.score_centi);
  }
}
