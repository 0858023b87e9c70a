#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "veritas/metrics.hpp"
#include "veritas/model.hpp"
#include "veritas/snapshot.hpp"
#include "veritas/telemetry.hpp"

namespace veritas {

struct ObserverConfig {
  std::filesystem::path source_root = ".";
  std::vector<std::string> include_globs;
  std::vector<std::string> exclude_globs;
  std::vector<MetricPattern> metric_patterns = default_metric_patterns();
  std::string telemetry_interval_seconds = "1.0";
  Tier tier = Tier::full;
  std::uint64_t max_file_bytes = 64ull << 20;

  SnapshotOptions snapshot_options() const;
  void validate() const;  // throws bad_config / bad_path
};

// Where transcripts land and where child output is forwarded. Forwarding
// never backpressures capture: a stalled or closed sink only affects the
// display copy.
struct RunIo {
  std::filesystem::path stdout_path;
  std::filesystem::path stderr_path;
  int forward_stdout_fd = 1;  // -1 = do not forward
  int forward_stderr_fd = 2;
};

// Runs argv unmodified (environment, working directory, stdin passthrough),
// tees both output streams to transcripts and the forward fds, snapshots
// sources before and after, samples telemetry for the duration, and appends
// the assembled RunRecord to the session.
//
// A non-zero child exit still yields a complete record; the observer only
// throws for its own failures (spawn, sealed session, transcript IO).
RunRecord run_command(SessionRecord& session, const ObserverConfig& config,
                      const std::vector<std::string>& argv, const RunIo& io,
                      GpuReader* gpu = nullptr);

}  // namespace veritas
