#include "veritas/telemetry.hpp"

#include <unistd.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "veritas/errors.hpp"

namespace veritas {

namespace fs = std::filesystem;

namespace {

struct ProcStat {
  pid_t pid = 0;
  pid_t ppid = 0;
  std::int64_t cpu_ticks = 0;  // utime + stime
  std::int64_t child_cpu_ticks = 0;  // cutime + cstime (reaped children)
};

bool read_proc_stat(pid_t pid, ProcStat& out) {
  char path[64];
  std::snprintf(path, sizeof path, "/proc/%d/stat", pid);
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  std::getline(in, line);
  // comm is parenthesized and may contain spaces; fields resume after the
  // last ')'.
  const std::size_t close = line.rfind(')');
  if (close == std::string::npos) return false;
  const char* p = line.c_str() + close + 1;
  // fields after comm: state(3) ppid(4) ... utime(14) stime(15) cutime(16) cstime(17)
  char state;
  long ppid;
  unsigned long utime, stime;
  long cutime, cstime;
  int n = std::sscanf(p,
                      " %c %ld %*d %*d %*d %*d %*u %*u %*u %*u %*u %lu %lu %ld %ld",
                      &state, &ppid, &utime, &stime, &cutime, &cstime);
  if (n != 6) return false;
  out.pid = pid;
  out.ppid = static_cast<pid_t>(ppid);
  out.cpu_ticks = static_cast<std::int64_t>(utime) + static_cast<std::int64_t>(stime);
  out.child_cpu_ticks = cutime + cstime;
  return true;
}

std::uint64_t read_rss_bytes(pid_t pid) {
  char path[64];
  std::snprintf(path, sizeof path, "/proc/%d/statm", pid);
  std::ifstream in(path);
  if (!in) return 0;
  std::uint64_t total_pages = 0, rss_pages = 0;
  in >> total_pages >> rss_pages;
  if (!in) return 0;
  static const long page = sysconf(_SC_PAGESIZE);
  return rss_pages * static_cast<std::uint64_t>(page);
}

struct IoCounters {
  std::uint64_t read_bytes = 0;
  std::uint64_t write_bytes = 0;
};

// Syscall-level byte counters (rchar/wchar). The block-layer counters are
// invisible on network and virtual filesystems, so they cannot back the
// cumulative I/O fields. Some sandbox kernels label the first field
// "char:" rather than "rchar:"; accept both.
bool read_proc_io(pid_t pid, IoCounters& out) {
  char path[64];
  std::snprintf(path, sizeof path, "/proc/%d/io", pid);
  std::ifstream in(path);
  if (!in) return false;
  std::string key;
  std::uint64_t value;
  bool got_r = false, got_w = false;
  while (in >> key >> value) {
    if (key == "rchar:" || key == "char:") {
      out.read_bytes = value;
      got_r = true;
    } else if (key == "wchar:") {
      out.write_bytes = value;
      got_w = true;
    }
  }
  return got_r && got_w;
}

std::vector<pid_t> process_tree(pid_t root) {
  std::unordered_map<pid_t, std::vector<pid_t>> children;
  std::error_code ec;
  for (fs::directory_iterator it("/proc", ec), end; !ec && it != end; it.increment(ec)) {
    const std::string name = it->path().filename().string();
    if (name.empty() || !std::isdigit(static_cast<unsigned char>(name[0]))) continue;
    const pid_t pid = static_cast<pid_t>(std::strtol(name.c_str(), nullptr, 10));
    ProcStat st;
    if (read_proc_stat(pid, st)) children[st.ppid].push_back(pid);
  }
  std::vector<pid_t> tree;
  std::vector<pid_t> queue{root};
  while (!queue.empty()) {
    pid_t pid = queue.back();
    queue.pop_back();
    tree.push_back(pid);
    auto it = children.find(pid);
    if (it == children.end()) continue;
    for (pid_t c : it->second) queue.push_back(c);
  }
  return tree;
}

class NvidiaSmiReader final : public GpuReader {
public:
  std::optional<GpuReading> sample() override {
    FILE* pipe = popen(
        "nvidia-smi --query-gpu=utilization.gpu,memory.used --format=csv,noheader,nounits "
        "2>/dev/null",
        "r");
    if (!pipe) return std::nullopt;
    char buf[256];
    std::string out;
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int rc = pclose(pipe);
    if (rc != 0 || out.empty()) return std::nullopt;
    GpuReading r;
    unsigned long long mem_mib = 0;
    if (std::sscanf(out.c_str(), "%d, %llu", &r.util_pct, &mem_mib) != 2) return std::nullopt;
    r.mem_bytes = mem_mib * 1024ull * 1024ull;
    return r;
  }
};

}  // namespace

std::unique_ptr<GpuReader> make_platform_gpu_reader() {
  // One probe decides for the whole run; flapping between "present" and
  // "absent" would corrupt the trace semantics.
  NvidiaSmiReader probe;
  if (!probe.sample()) return nullptr;
  return std::make_unique<NvidiaSmiReader>();
}

struct TelemetrySampler::Impl {
  pid_t root;
  std::string interval_lexical;
  double interval_s = 1.0;
  GpuReader* gpu = nullptr;

  std::thread worker;
  std::mutex mu;
  std::condition_variable cv;
  std::mutex sample_mu;  // serializes take_sample between worker and sample_now
  bool stopping = false;
  bool started = false;
  std::vector<TelemetrySample> samples;

  // Last-known counters per pid; vanished pids keep contributing their
  // final values so cumulative totals never decrease.
  std::unordered_map<pid_t, IoCounters> io_live;
  IoCounters io_retired;
  std::int64_t last_cpu_ms = 0;
  std::uint64_t last_read = 0, last_write = 0;
  long clk_tck = sysconf(_SC_CLK_TCK);

  void take_sample() {
    std::lock_guard<std::mutex> sample_lock(sample_mu);
    const auto tree = process_tree(root);
    std::int64_t cpu_ticks = 0;
    std::uint64_t rss = 0;
    std::unordered_set<pid_t> seen;
    for (pid_t pid : tree) {
      ProcStat st;
      if (read_proc_stat(pid, st)) {
        cpu_ticks += st.cpu_ticks;
        if (pid == root) cpu_ticks += st.child_cpu_ticks;
      }
      rss += read_rss_bytes(pid);
      IoCounters io;
      if (read_proc_io(pid, io)) {
        io_live[pid] = io;
      }
      seen.insert(pid);
    }
    // Retire counters of pids that left the tree.
    for (auto it = io_live.begin(); it != io_live.end();) {
      if (!seen.count(it->first)) {
        io_retired.read_bytes += it->second.read_bytes;
        io_retired.write_bytes += it->second.write_bytes;
        it = io_live.erase(it);
      } else {
        ++it;
      }
    }
    std::uint64_t read = io_retired.read_bytes, write = io_retired.write_bytes;
    for (const auto& [pid, io] : io_live) {
      read += io.read_bytes;
      write += io.write_bytes;
    }

    TelemetrySample s;
    s.at = Timestamp::now();
    std::int64_t cpu_ms = cpu_ticks * 1000 / (clk_tck > 0 ? clk_tck : 100);
    // Reaped grandchildren can momentarily drop out of the live sum before
    // the root's child accounting picks them up; clamp monotone.
    if (cpu_ms < last_cpu_ms) cpu_ms = last_cpu_ms;
    if (read < last_read) read = last_read;
    if (write < last_write) write = last_write;
    last_cpu_ms = cpu_ms;
    last_read = read;
    last_write = write;
    s.cpu_time_ms = cpu_ms;
    s.rss_bytes = rss;
    s.disk_read_bytes = read;
    s.disk_write_bytes = write;
    if (gpu) {
      if (auto r = gpu->sample()) {
        int util = r->util_pct;
        if (util < 0) util = 0;
        if (util > 100) util = 100;
        s.gpu_util_pct = util;
        s.gpu_mem_bytes = r->mem_bytes;
      }
    }
    std::lock_guard<std::mutex> lock(mu);
    if (!samples.empty() && s.at.ms <= samples.back().at.ms) {
      s.at = Timestamp::from_ms(samples.back().at.ms + 1);
    }
    samples.push_back(std::move(s));
  }

  void run() {
    using clock = std::chrono::steady_clock;
    const auto interval = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(interval_s));
    auto deadline = clock::now() + interval;
    std::unique_lock<std::mutex> lock(mu);
    while (!cv.wait_until(lock, deadline, [&] { return stopping; })) {
      lock.unlock();
      take_sample();
      // Absolute deadlines; if a tick ran long, re-anchor instead of
      // bursting to catch up.
      deadline += interval;
      const auto now = clock::now();
      if (deadline < now) deadline = now + interval;
      lock.lock();
    }
  }
};

TelemetrySampler::TelemetrySampler(pid_t root_pid, std::string interval_lexical, GpuReader* gpu)
    : impl_(std::make_unique<Impl>()) {
  impl_->root = root_pid;
  impl_->interval_lexical = std::move(interval_lexical);
  TelemetryTrace probe;
  probe.interval_seconds = impl_->interval_lexical;
  impl_->interval_s = probe.interval();  // validates > 0
  impl_->gpu = gpu;
}

TelemetrySampler::~TelemetrySampler() {
  try {
    stop();
  } catch (...) {
  }
}

void TelemetrySampler::start() {
  if (impl_->started) return;
  ProcStat st;
  if (!read_proc_stat(impl_->root, st)) {
    fail(Errc::process_not_found, "pid " + std::to_string(impl_->root));
  }
  impl_->started = true;
  impl_->worker = std::thread([this] { impl_->run(); });
}

void TelemetrySampler::sample_now() {
  if (!impl_->started) return;
  impl_->take_sample();
}

TelemetryTrace TelemetrySampler::stop() {
  if (impl_->worker.joinable()) {
    {
      std::lock_guard<std::mutex> lock(impl_->mu);
      impl_->stopping = true;
    }
    impl_->cv.notify_all();
    impl_->worker.join();
  }
  TelemetryTrace trace;
  trace.interval_seconds = impl_->interval_lexical;
  std::lock_guard<std::mutex> lock(impl_->mu);
  trace.samples = impl_->samples;
  return trace;
}

}  // namespace veritas
