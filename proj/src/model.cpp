#include "veritas/model.hpp"

#include <openssl/rand.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "veritas/errors.hpp"

namespace veritas {

const char* to_string(Tier t) { return t == Tier::minimal ? "minimal" : "full"; }
const char* to_string(SessionState s) { return s == SessionState::open ? "open" : "sealed"; }
const char* to_string(StreamKind k) {
  return k == StreamKind::stdout_stream ? "stdout" : "stderr";
}

Tier tier_from_string(std::string_view s) {
  if (s == "minimal") return Tier::minimal;
  if (s == "full") return Tier::full;
  fail(Errc::bad_config, "unknown tier: " + std::string(s));
}

SessionState session_state_from_string(std::string_view s) {
  if (s == "open") return SessionState::open;
  if (s == "sealed") return SessionState::sealed;
  fail(Errc::bad_config, "unknown session state: " + std::string(s));
}

StreamKind stream_kind_from_string(std::string_view s) {
  if (s == "stdout") return StreamKind::stdout_stream;
  if (s == "stderr") return StreamKind::stderr_stream;
  fail(Errc::bad_config, "unknown stream kind: " + std::string(s));
}

const char* to_string(HmcFlagCode c) {
  switch (c) {
    case HmcFlagCode::zero_cost_metric: return "ZERO_COST_METRIC";
    case HmcFlagCode::gpu_claim_inactive: return "GPU_CLAIM_INACTIVE";
    case HmcFlagCode::no_telemetry: return "NO_TELEMETRY";
    case HmcFlagCode::counter_anomaly: return "COUNTER_ANOMALY";
  }
  return "UNKNOWN";
}

HmcFlagCode hmc_flag_code_from_string(std::string_view s) {
  if (s == "ZERO_COST_METRIC") return HmcFlagCode::zero_cost_metric;
  if (s == "GPU_CLAIM_INACTIVE") return HmcFlagCode::gpu_claim_inactive;
  if (s == "NO_TELEMETRY") return HmcFlagCode::no_telemetry;
  if (s == "COUNTER_ANOMALY") return HmcFlagCode::counter_anomaly;
  fail(Errc::bad_config, "unknown HMC flag code: " + std::string(s));
}

std::string TelemetrySample::cpu_time_seconds_lexical() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(cpu_time_ms / 1000),
                static_cast<long long>(cpu_time_ms % 1000));
  return buf;
}

double TelemetryTrace::interval() const {
  char* end = nullptr;
  double v = std::strtod(interval_seconds.c_str(), &end);
  if (end == nullptr || *end != '\0' || !(v > 0.0)) {
    fail(Errc::bad_config, "telemetry interval is not a positive decimal: " + interval_seconds);
  }
  return v;
}

std::string HmcReport::score_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%d.%02d", score_centi / 100, score_centi % 100);
  return buf;
}

SessionRecord SessionRecord::create(std::string session_id, Timestamp created_at, Tier tier,
                                    EnvironmentFingerprint environment) {
  SessionRecord s;
  s.session_id_ = std::move(session_id);
  // The creation timestamp is defined at second precision.
  s.created_at_ = Timestamp::from_ms((created_at.ms / 1000) * 1000);
  s.tier_ = tier;
  s.environment_ = std::move(environment);
  s.state_ = SessionState::open;
  return s;
}

std::string SessionRecord::new_session_id() {
  unsigned char raw[16];
  if (RAND_bytes(raw, sizeof raw) != 1) fail(Errc::io_error, "system RNG unavailable");
  return to_hex(raw, sizeof raw);
}

SessionRecord SessionRecord::restore(std::string session_id, Timestamp created_at, Tier tier,
                                     EnvironmentFingerprint environment,
                                     std::vector<RunRecord> runs, std::optional<HmcReport> hmc,
                                     SessionState state) {
  SessionRecord s;
  s.session_id_ = std::move(session_id);
  s.created_at_ = created_at;
  s.tier_ = tier;
  s.environment_ = std::move(environment);
  s.runs_ = std::move(runs);
  s.hmc_ = std::move(hmc);
  s.state_ = state;
  return s;
}

void SessionRecord::append_run(RunRecord run) {
  if (sealed()) fail(Errc::session_sealed, "cannot append a run to a sealed session");
  runs_.push_back(std::move(run));
}

void SessionRecord::set_hmc(HmcReport report) {
  if (sealed()) fail(Errc::session_sealed, "cannot set HMC on a sealed session");
  hmc_ = std::move(report);
}

void SessionRecord::finalize() {
  if (sealed()) fail(Errc::session_sealed, "session already sealed");
  state_ = SessionState::sealed;
}

void SessionRecord::update_declarations(
    std::vector<std::pair<std::string, std::string>> frameworks,
    std::vector<std::pair<std::string, std::int64_t>> seeds) {
  if (sealed()) fail(Errc::session_sealed, "cannot update a sealed session");
  std::sort(frameworks.begin(), frameworks.end());
  std::sort(seeds.begin(), seeds.end());
  environment_.framework_versions = std::move(frameworks);
  environment_.random_seeds = std::move(seeds);
}

namespace {

bool is_lower_hex(std::string_view s, std::size_t n) {
  if (s.size() != n) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

bool valid_relative_path(std::string_view p) {
  if (p.empty() || p.front() == '/') return false;
  std::size_t start = 0;
  while (start <= p.size()) {
    std::size_t end = p.find('/', start);
    if (end == std::string_view::npos) end = p.size();
    std::string_view seg = p.substr(start, end - start);
    if (seg.empty() || seg == "." || seg == "..") return false;
    start = end + 1;
    if (end == p.size()) break;
  }
  return true;
}

void check_snapshot(const SourceSnapshot& snap, const std::string& where,
                    std::vector<std::string>& out) {
  std::uint64_t bytes = 0;
  const FileDigest* prev = nullptr;
  for (const auto& f : snap.files) {
    if (!valid_relative_path(f.path)) {
      out.push_back(where + ": invalid path '" + f.path + "'");
    }
    if (prev && !(prev->path < f.path)) {
      out.push_back(where + ": files not strictly ordered at '" + f.path + "'");
    }
    if (!f.is_error() && !is_lower_hex(f.digest.hex, 64)) {
      out.push_back(where + ": malformed digest for '" + f.path + "'");
    }
    bytes += f.size_bytes;
    prev = &f;
  }
  if (snap.total_files != snap.files.size()) {
    out.push_back(where + ": total_files does not match file list length");
  }
  if (snap.total_bytes != bytes) {
    out.push_back(where + ": total_bytes does not match sum over files");
  }
}

void check_trace(const TelemetryTrace& trace, const std::string& where,
                 std::vector<std::string>& out) {
  double t;
  try {
    t = trace.interval();
  } catch (const Error&) {
    out.push_back(where + ": invalid interval_seconds '" + trace.interval_seconds + "'");
    return;
  }
  const std::int64_t lo = static_cast<std::int64_t>(t * 1000 * 0.5);
  const std::int64_t hi = static_cast<std::int64_t>(t * 1000 * 3.0);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    if (s.gpu_util_pct && (*s.gpu_util_pct < 0 || *s.gpu_util_pct > 100)) {
      out.push_back(where + ": gpu_util_pct out of [0,100]");
    }
    if (i == 0) continue;
    const auto& p = trace.samples[i - 1];
    if (!(p.at < s.at)) {
      out.push_back(where + ": sample timestamps not strictly increasing");
    }
    if (s.cpu_time_ms < p.cpu_time_ms || s.disk_read_bytes < p.disk_read_bytes ||
        s.disk_write_bytes < p.disk_write_bytes) {
      out.push_back(where + ": cumulative counter decreased between samples");
    }
    // Inter-sample gap discipline; the final gap may be a partial interval.
    const std::int64_t gap = s.at.ms - p.at.ms;
    const bool final_gap = (i + 1 == trace.samples.size());
    if (gap > hi || (!final_gap && gap < lo)) {
      out.push_back(where + ": sample gap outside [0.5t, 3t]");
    }
  }
}

}  // namespace

std::vector<std::string> validate_session(const SessionRecord& session) {
  std::vector<std::string> out;
  if (!is_lower_hex(session.session_id(), 32)) {
    out.push_back("session_id is not 32 lowercase hex chars");
  }
  if (session.tier() != session.environment().tier) {
    out.push_back("session tier differs from environment fingerprint tier");
  }
  if (session.environment().tier == Tier::minimal) {
    const auto& e = session.environment();
    if (!e.os_name_version.empty() || !e.cpu_model.empty() || e.cpu_cores != 0 ||
        !e.gpu_model.empty() || e.total_ram_bytes != 0) {
      out.push_back("minimal-tier fingerprint carries full-tier fields");
    }
  }
  const RunRecord* prev = nullptr;
  for (const auto& run : session.runs()) {
    const std::string where = "run " + std::to_string(run.run_index);
    if (run.run_index != static_cast<std::uint32_t>(&run - session.runs().data())) {
      out.push_back(where + ": run_index does not match position");
    }
    if (run.command.empty()) out.push_back(where + ": empty command");
    if (run.ended_at < run.started_at) out.push_back(where + ": ended_at before started_at");
    if (prev && run.started_at < prev->started_at) {
      out.push_back(where + ": runs not ordered by start timestamp");
    }
    if (!is_lower_hex(run.stdout_digest.hex, 64)) out.push_back(where + ": bad stdout digest");
    if (!is_lower_hex(run.stderr_digest.hex, 64)) out.push_back(where + ": bad stderr digest");
    for (const auto& m : run.metrics) {
      if (m.name.empty()) out.push_back(where + ": metric with empty name");
      const std::uint64_t stream_bytes =
          m.stream == StreamKind::stdout_stream ? run.stdout_bytes : run.stderr_bytes;
      if (m.byte_offset >= stream_bytes) {
        out.push_back(where + ": metric '" + m.name + "' offset outside its stream");
      }
    }
    check_snapshot(run.sources_before, where + " sources_before", out);
    check_snapshot(run.sources_after, where + " sources_after", out);
    check_trace(run.telemetry, where + " telemetry", out);
    prev = &run;
  }
  return out;
}

}  // namespace veritas
