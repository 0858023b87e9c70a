#include "veritas/hmc.hpp"

#include <algorithm>
#include <cstdio>

#include "veritas/errors.hpp"

namespace veritas {

namespace {

std::string fmt_seconds(std::int64_t ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(ms) / 1000.0);
  return buf;
}

}  // namespace

HmcReport evaluate_hmc(const SessionRecord& session, const HmcThresholds& th) {
  if (session.runs().empty()) fail(Errc::empty_session, "session has no runs");

  HmcReport report;
  int penalty = 0;

  const auto& env = session.environment();
  const bool gpu_claimed = env.tier == Tier::full && !env.gpu_model.empty();

  for (const auto& run : session.runs()) {
    const bool has_metrics = !run.metrics.empty();
    const std::int64_t wall = run.wall_ms();
    const std::int64_t cpu = run.cpu_time_ms();
    // With no samples at all CPU time is unknown, not zero; the missing
    // trace is NO_TELEMETRY's business.
    const bool cpu_known = !run.telemetry.samples.empty();

    if (has_metrics && (wall < th.min_wall_ms || (cpu_known && cpu < th.min_cpu_ms))) {
      report.flags.push_back(
          {HmcFlagCode::zero_cost_metric,
           "metrics reported by a run with wall " + fmt_seconds(wall) + " s and cpu " +
               fmt_seconds(cpu) + " s",
           run.run_index});
      penalty += 20;
    }

    if (gpu_claimed && has_metrics && wall >= th.gpu_check_min_wall_ms) {
      int max_util = 0;
      bool any_gpu_sample = false;
      for (const auto& s : run.telemetry.samples) {
        if (s.gpu_util_pct) {
          any_gpu_sample = true;
          max_util = std::max(max_util, *s.gpu_util_pct);
        }
      }
      if (!any_gpu_sample || max_util < th.gpu_util_active_pct) {
        report.flags.push_back(
            {HmcFlagCode::gpu_claim_inactive,
             "environment claims '" + env.gpu_model + "' but peak utilization was " +
                 (any_gpu_sample ? std::to_string(max_util) + "%" : "never observed"),
             run.run_index});
        penalty += 30;
      }
    }

    const double t_ms = run.telemetry.interval() * 1000.0;
    if (has_metrics && run.telemetry.samples.empty() &&
        static_cast<double>(wall) >= 2.0 * t_ms) {
      report.flags.push_back({HmcFlagCode::no_telemetry,
                              "metrics reported but no telemetry samples over " +
                                  fmt_seconds(wall) + " s",
                              run.run_index});
      penalty += 40;
    }

    for (std::size_t i = 1; i < run.telemetry.samples.size(); ++i) {
      const auto& prev = run.telemetry.samples[i - 1];
      const auto& cur = run.telemetry.samples[i];
      if (cur.cpu_time_ms < prev.cpu_time_ms || cur.disk_read_bytes < prev.disk_read_bytes ||
          cur.disk_write_bytes < prev.disk_write_bytes) {
        report.flags.push_back({HmcFlagCode::counter_anomaly,
                                "cumulative counter decreased at sample " + std::to_string(i),
                                run.run_index});
        penalty += 10;
        break;  // one anomaly flag per run
      }
    }
  }

  report.score_centi = std::clamp(100 - penalty, 0, 100);
  return report;
}

}  // namespace veritas
