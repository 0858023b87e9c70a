#pragma once

#include <sys/types.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "veritas/model.hpp"

namespace veritas {

struct GpuReading {
  int util_pct = 0;
  std::uint64_t mem_bytes = 0;
};

// Accelerator management interface. Absence is recorded as absence, never
// as zero; the consistency scorer must distinguish "no GPU" from "idle GPU".
class GpuReader {
public:
  virtual ~GpuReader() = default;
  virtual std::optional<GpuReading> sample() = 0;
};

// Returns nullptr when the platform has no accelerator management
// interface (no NVML / nvidia-smi reachable).
std::unique_ptr<GpuReader> make_platform_gpu_reader();

// Samples the process tree rooted at one pid on a fixed interval:
// cumulative CPU time, resident memory, cumulative read/write I/O bytes,
// and accelerator utilization when a GpuReader is supplied. Counters for
// vanished descendants are retained so cumulative totals never decrease.
class TelemetrySampler {
public:
  // interval_lexical is the decimal rendering of t kept in the trace.
  TelemetrySampler(pid_t root_pid, std::string interval_lexical, GpuReader* gpu = nullptr);
  ~TelemetrySampler();
  TelemetrySampler(const TelemetrySampler&) = delete;
  TelemetrySampler& operator=(const TelemetrySampler&) = delete;

  // Begins periodic sampling; the first sample lands one interval in.
  // Throws Errc::process_not_found if the root process is already gone.
  void start();

  // Takes one immediate sample (used just before the child is reaped, while
  // its accounting is still visible).
  void sample_now();

  // Stops sampling and returns the trace. Idempotent.
  TelemetryTrace stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace veritas
