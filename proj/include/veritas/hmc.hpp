#pragma once

#include <cstdint>

#include "veritas/model.hpp"

namespace veritas {

// Config-overridable thresholds; defaults anchor the one behavior the
// scoring rules are calibrated against (a sub-second metric-emitting run
// scores 0.80 PASS with a single ZERO_COST_METRIC flag).
struct HmcThresholds {
  std::int64_t min_wall_ms = 1000;          // runs shorter than this are zero-cost
  std::int64_t min_cpu_ms = 100;            // ... as are runs with less CPU than this
  int gpu_util_active_pct = 1;              // below this the GPU counts as inactive
  std::int64_t gpu_check_min_wall_ms = 60000;  // GPU-claim check applies from here up
};

// Deterministic rule-based score over a session: start at 1.0 and subtract
//   0.20 per run raising ZERO_COST_METRIC,
//   0.30 per run raising GPU_CLAIM_INACTIVE,
//   0.40 per run raising NO_TELEMETRY,
//   0.10 per run raising COUNTER_ANOMALY,
// clamped to [0, 1]. Verdict is PASS iff score >= 0.5. Pure function of the
// session; throws Errc::empty_session when there are no runs.
HmcReport evaluate_hmc(const SessionRecord& session, const HmcThresholds& thresholds = {});

}  // namespace veritas
