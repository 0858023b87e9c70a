#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "veritas/digest.hpp"
#include "veritas/time.hpp"

namespace veritas {

enum class Tier { minimal, full };
enum class SessionState { open, sealed };
enum class StreamKind { stdout_stream, stderr_stream };

const char* to_string(Tier t);
const char* to_string(SessionState s);
const char* to_string(StreamKind k);
Tier tier_from_string(std::string_view s);
SessionState session_state_from_string(std::string_view s);
StreamKind stream_kind_from_string(std::string_view s);

// One reported metric. The lexical token as printed by the observed process
// is authoritative; the numeric value is derived from it at parse time and
// never serialized.
struct MetricRecord {
  std::string name;
  std::string lexical_value;
  double numeric_value = 0.0;
  StreamKind stream = StreamKind::stdout_stream;
  std::uint64_t byte_offset = 0;  // offset of the line start in the stream
  Timestamp observed_at;

  bool operator==(const MetricRecord&) const = default;
};

// One file in a source snapshot. Exactly one of these shapes:
//   regular file: digest + size_bytes
//   symlink:      link_target set; digest/size are over the target string
//   error entry:  error set; digest empty
struct FileDigest {
  std::string path;  // relative, forward-slash separated
  std::uint64_t size_bytes = 0;
  Digest digest;
  std::string link_target;
  std::string error;

  bool is_symlink() const { return !link_target.empty(); }
  bool is_error() const { return !error.empty(); }
  bool operator==(const FileDigest&) const = default;
};

struct SourceSnapshot {
  std::string root;
  std::vector<FileDigest> files;  // sorted by path, byte-lexicographic
  std::uint64_t total_files = 0;
  std::uint64_t total_bytes = 0;

  bool operator==(const SourceSnapshot&) const = default;
};

struct TelemetrySample {
  Timestamp at;
  std::int64_t cpu_time_ms = 0;  // cumulative process-tree CPU time
  std::uint64_t rss_bytes = 0;
  std::optional<int> gpu_util_pct;          // absent when no accelerator observed
  std::optional<std::uint64_t> gpu_mem_bytes;
  std::uint64_t disk_read_bytes = 0;   // cumulative
  std::uint64_t disk_write_bytes = 0;  // cumulative

  // Fixed-precision rendering ("12.345") used by the canonical form.
  std::string cpu_time_seconds_lexical() const;

  bool operator==(const TelemetrySample&) const = default;
};

struct TelemetryTrace {
  std::string interval_seconds = "1.0";  // lexical decimal, the sampling period t
  std::vector<TelemetrySample> samples;

  double interval() const;  // parsed from interval_seconds

  bool operator==(const TelemetryTrace&) const = default;
};

// One observed execution.
struct RunRecord {
  std::uint32_t run_index = 0;
  std::vector<std::string> command;  // exact argument vector as invoked
  Timestamp started_at;
  Timestamp ended_at;
  int exit_code = 0;
  Digest stdout_digest;
  Digest stderr_digest;
  std::uint64_t stdout_bytes = 0;
  std::uint64_t stderr_bytes = 0;
  std::vector<MetricRecord> metrics;  // in observation order
  SourceSnapshot sources_before;
  SourceSnapshot sources_after;
  TelemetryTrace telemetry;

  std::int64_t wall_ms() const { return ended_at.ms - started_at.ms; }
  std::int64_t cpu_time_ms() const {
    return telemetry.samples.empty() ? 0 : telemetry.samples.back().cpu_time_ms;
  }

  bool operator==(const RunRecord&) const = default;
};

struct EnvironmentFingerprint {
  Tier tier = Tier::full;
  std::vector<std::pair<std::string, std::string>> framework_versions;  // sorted by name
  std::vector<std::pair<std::string, std::int64_t>> random_seeds;       // sorted by name
  // Full tier only; empty/zero and omitted from the record in minimal tier.
  std::string os_name_version;
  std::string cpu_model;
  std::uint32_t cpu_cores = 0;
  std::string gpu_model;  // empty = no accelerator observed
  std::uint64_t total_ram_bytes = 0;

  bool operator==(const EnvironmentFingerprint&) const = default;
};

enum class HmcFlagCode { zero_cost_metric, gpu_claim_inactive, no_telemetry, counter_anomaly };

const char* to_string(HmcFlagCode c);
HmcFlagCode hmc_flag_code_from_string(std::string_view s);

struct HmcFlag {
  HmcFlagCode code;
  std::string detail;
  std::uint32_t run_index = 0;

  bool operator==(const HmcFlag&) const = default;
};

// Hardware-metric consistency report. The score is held in integer
// hundredths so the rendered form ("0.80") is exact.
struct HmcReport {
  int score_centi = 100;  // 0..100
  std::vector<HmcFlag> flags;

  double score() const { return score_centi / 100.0; }
  bool pass() const { return score_centi >= 50; }
  const char* verdict() const { return pass() ? "PASS" : "FAIL"; }
  std::string score_string() const;  // "0.80", "1.00"

  bool operator==(const HmcReport&) const = default;
};

// The service-issued attestation over a session digest.
struct Attestation {
  Digest session_digest;
  std::string signature_base64;  // RSA-PSS over the ASCII bytes of session_digest.hex
  std::string algorithm = "RSA-PSS-SHA256";
  int key_bits = 4096;
  std::string key_id;
  std::string service_id;
  Timestamp signed_at;

  bool operator==(const Attestation&) const = default;
};

// The complete attested object: linked runs + environment fingerprint.
// Mutation is only possible while open; a sealed session is immutable.
class SessionRecord {
public:
  SessionRecord() = default;

  static SessionRecord create(std::string session_id, Timestamp created_at, Tier tier,
                              EnvironmentFingerprint environment);

  // 128 random bits from the system CSPRNG as 32 lowercase hex chars.
  static std::string new_session_id();

  // Deserialization entry point; performs no semantic validation beyond
  // what the caller supplies (see validate_session).
  static SessionRecord restore(std::string session_id, Timestamp created_at, Tier tier,
                               EnvironmentFingerprint environment, std::vector<RunRecord> runs,
                               std::optional<HmcReport> hmc, SessionState state);

  const std::string& session_id() const { return session_id_; }
  Timestamp created_at() const { return created_at_; }
  Tier tier() const { return tier_; }
  SessionState state() const { return state_; }
  bool sealed() const { return state_ == SessionState::sealed; }
  const EnvironmentFingerprint& environment() const { return environment_; }
  const std::vector<RunRecord>& runs() const { return runs_; }
  std::uint64_t run_count() const { return runs_.size(); }
  const std::optional<HmcReport>& hmc() const { return hmc_; }

  // All mutators throw Errc::session_sealed once sealed.
  void append_run(RunRecord run);
  void set_hmc(HmcReport report);
  void finalize();  // open -> sealed

  // Refreshes the author-declared fingerprint fields (frameworks, seeds)
  // from config; the machine fields stay as captured at init.
  void update_declarations(std::vector<std::pair<std::string, std::string>> frameworks,
                           std::vector<std::pair<std::string, std::int64_t>> seeds);

  bool operator==(const SessionRecord&) const = default;

private:
  std::string session_id_;
  Timestamp created_at_;
  Tier tier_ = Tier::full;
  EnvironmentFingerprint environment_;
  std::vector<RunRecord> runs_;
  std::optional<HmcReport> hmc_;
  SessionState state_ = SessionState::open;
};

// Structural invariant check over a (possibly deserialized, possibly
// tampered) session. Returns human-readable violations; empty means sound.
std::vector<std::string> validate_session(const SessionRecord& session);

}  // namespace veritas
