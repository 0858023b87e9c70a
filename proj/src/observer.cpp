#include "veritas/observer.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include "veritas/errors.hpp"

namespace veritas {

namespace {

struct Pipe {
  int read_fd = -1;
  int write_fd = -1;

  void open() {
    int fds[2];
    if (pipe2(fds, O_CLOEXEC) != 0) fail(Errc::spawn_failure, "pipe2 failed");
    read_fd = fds[0];
    write_fd = fds[1];
  }
  void close_read() {
    if (read_fd >= 0) ::close(read_fd), read_fd = -1;
  }
  void close_write() {
    if (write_fd >= 0) ::close(write_fd), write_fd = -1;
  }
  ~Pipe() {
    close_read();
    close_write();
  }
};

ssize_t write_all(int fd, const char* data, std::size_t len) {
  std::size_t done = 0;
  while (done < len) {
    ssize_t n = ::write(fd, data + done, len - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      return -1;
    }
    done += static_cast<std::size_t>(n);
  }
  return static_cast<ssize_t>(done);
}

// Captures one child stream: the reader thread drains the pipe into the
// transcript file, digest, and metric scanner; a detached queue feeds the
// forward fd so a slow display sink never blocks the child.
class StreamTee {
public:
  StreamTee(int source_fd, const std::filesystem::path& transcript_path, int forward_fd,
            const std::vector<MetricPattern>& patterns, StreamKind kind)
      : source_fd_(source_fd), forward_fd_(forward_fd), scanner_(patterns, kind) {
    out_.open(transcript_path, std::ios::binary | std::ios::trunc);
    if (!out_) {
      io_failed_ = true;
      io_detail_ = "cannot open transcript " + transcript_path.string();
    }
  }

  void start() {
    reader_ = std::thread([this] { pump(); });
    if (forward_fd_ >= 0) {
      forwarder_ = std::thread([this] { forward(); });
    }
  }

  // Waits until the child's stream hit EOF and every byte is in the
  // transcript. Forwarding may still be draining.
  void finish_capture() {
    if (reader_.joinable()) reader_.join();
    out_.flush();
    if (out_.is_open() && !out_) {
      io_failed_ = true;
      if (io_detail_.empty()) io_detail_ = "transcript flush failed";
    }
    out_.close();
  }

  // Lets the display copy drain. Called after the child is reaped so a slow
  // sink never distorts the run's recorded duration.
  void finish_forwarding() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      input_done_ = true;
    }
    cv_.notify_all();
    if (forwarder_.joinable()) forwarder_.join();
  }

  bool io_failed() const { return io_failed_; }
  const std::string& io_detail() const { return io_detail_; }
  std::uint64_t byte_count() const { return bytes_; }
  Digest take_digest() { return hash_.finish(); }
  std::vector<MetricRecord> take_metrics() { return scanner_.take(); }

private:
  void pump() {
    char buf[1 << 16];
    for (;;) {
      ssize_t n = ::read(source_fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (n == 0) break;
      const auto len = static_cast<std::size_t>(n);
      if (!io_failed_ && out_.is_open()) {
        out_.write(buf, n);
        if (!out_) {
          io_failed_ = true;
          io_detail_ = "transcript write failed";
        }
      }
      hash_.update(buf, len);
      scanner_.feed(std::string_view(buf, len), Timestamp::now());
      bytes_ += len;
      if (forward_fd_ >= 0) {
        std::lock_guard<std::mutex> lock(mu_);
        queue_.emplace_back(buf, len);
        cv_.notify_all();
      }
    }
    scanner_.finish(Timestamp::now());
  }

  void forward() {
    for (;;) {
      std::string chunk;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return !queue_.empty() || input_done_; });
        if (queue_.empty()) return;
        chunk = std::move(queue_.front());
        queue_.pop_front();
      }
      if (!drop_forwarding_) {
        if (write_all(forward_fd_, chunk.data(), chunk.size()) < 0) {
          // Sink went away; keep capturing, stop displaying.
          drop_forwarding_ = true;
        }
      }
    }
  }

  int source_fd_;
  int forward_fd_;
  std::ofstream out_;
  Sha256 hash_;
  MetricScanner scanner_;
  std::uint64_t bytes_ = 0;
  bool io_failed_ = false;
  std::string io_detail_;
  bool drop_forwarding_ = false;

  std::thread reader_;
  std::thread forwarder_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool input_done_ = false;
};

struct SpawnResult {
  pid_t pid;
  int stdout_fd;
  int stderr_fd;
};

SpawnResult spawn_child(const std::vector<std::string>& argv, Pipe& out_pipe, Pipe& err_pipe) {
  Pipe errno_pipe;
  errno_pipe.open();

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) fail(Errc::spawn_failure, "fork failed");
  if (pid == 0) {
    // Child: only async-signal-safe calls from here.
    if (dup2(out_pipe.write_fd, STDOUT_FILENO) < 0 || dup2(err_pipe.write_fd, STDERR_FILENO) < 0) {
      _exit(127);
    }
    execvp(cargv[0], cargv.data());
    const int err = errno;
    ssize_t ignored = ::write(errno_pipe.write_fd, &err, sizeof err);
    (void)ignored;
    _exit(127);
  }

  out_pipe.close_write();
  err_pipe.close_write();
  errno_pipe.close_write();

  int exec_errno = 0;
  ssize_t n;
  do {
    n = ::read(errno_pipe.read_fd, &exec_errno, sizeof exec_errno);
  } while (n < 0 && errno == EINTR);
  if (n > 0) {
    int status = 0;
    waitpid(pid, &status, 0);
    fail(Errc::spawn_failure,
         "cannot execute '" + argv[0] + "': " + std::strerror(exec_errno));
  }
  return SpawnResult{pid, out_pipe.read_fd, err_pipe.read_fd};
}

int decode_wait_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 127;
}

}  // namespace

SnapshotOptions ObserverConfig::snapshot_options() const {
  SnapshotOptions opts;
  opts.include_globs = include_globs;
  opts.exclude_globs = exclude_globs;
  opts.max_file_bytes = max_file_bytes;
  return opts;
}

void ObserverConfig::validate() const {
  TelemetryTrace probe;
  probe.interval_seconds = telemetry_interval_seconds;
  probe.interval();  // throws unless a positive decimal
  if (!std::filesystem::is_directory(source_root)) {
    fail(Errc::bad_path, "source root does not exist: " + source_root.string());
  }
}

RunRecord run_command(SessionRecord& session, const ObserverConfig& config,
                      const std::vector<std::string>& argv, const RunIo& io, GpuReader* gpu) {
  if (session.sealed()) fail(Errc::session_sealed, "session is sealed");
  if (argv.empty()) fail(Errc::spawn_failure, "empty command");
  config.validate();

  RunRecord run;
  run.run_index = static_cast<std::uint32_t>(session.run_count());
  run.command = argv;
  run.telemetry.interval_seconds = config.telemetry_interval_seconds;

  // Fail before spawning if the transcript store is unusable.
  for (const auto& p : {io.stdout_path, io.stderr_path}) {
    std::ofstream probe(p, std::ios::binary | std::ios::trunc);
    if (!probe) fail(Errc::transcript_io_failure, "cannot open transcript " + p.string());
  }

  run.sources_before = snapshot_sources(config.source_root, config.snapshot_options());

  Pipe out_pipe, err_pipe;
  out_pipe.open();
  err_pipe.open();

  run.started_at = Timestamp::now();
  const SpawnResult child = spawn_child(argv, out_pipe, err_pipe);

  TelemetrySampler sampler(child.pid, config.telemetry_interval_seconds, gpu);
  try {
    sampler.start();
  } catch (const Error&) {
    // Child may already have exited; an empty trace is still a valid trace.
  }

  StreamTee out_tee(child.stdout_fd, io.stdout_path, io.forward_stdout_fd,
                    config.metric_patterns, StreamKind::stdout_stream);
  StreamTee err_tee(child.stderr_fd, io.stderr_path, io.forward_stderr_fd,
                    config.metric_patterns, StreamKind::stderr_stream);
  out_tee.start();
  err_tee.start();
  out_tee.finish_capture();
  err_tee.finish_capture();

  // Pipes are closed: the child is done (or has dropped its ends). Sample
  // once more while its accounting is still visible, then reap.
  sampler.sample_now();
  int status = 0;
  pid_t waited;
  do {
    waited = waitpid(child.pid, &status, 0);
  } while (waited < 0 && errno == EINTR);
  run.ended_at = Timestamp::now();
  if (run.ended_at <= run.started_at) run.ended_at = Timestamp::from_ms(run.started_at.ms + 1);
  run.exit_code = waited == child.pid ? decode_wait_status(status) : 127;
  run.telemetry = sampler.stop();

  out_tee.finish_forwarding();
  err_tee.finish_forwarding();

  if (out_tee.io_failed() || err_tee.io_failed()) {
    fail(Errc::transcript_io_failure,
         out_tee.io_failed() ? out_tee.io_detail() : err_tee.io_detail());
  }

  run.stdout_bytes = out_tee.byte_count();
  run.stderr_bytes = err_tee.byte_count();
  run.stdout_digest = out_tee.take_digest();
  run.stderr_digest = err_tee.take_digest();
  run.metrics = out_tee.take_metrics();
  auto err_metrics = err_tee.take_metrics();
  run.metrics.insert(run.metrics.end(), err_metrics.begin(), err_metrics.end());
  std::stable_sort(run.metrics.begin(), run.metrics.end(),
                   [](const MetricRecord& a, const MetricRecord& b) {
                     return a.observed_at < b.observed_at;
                   });

  run.sources_after = snapshot_sources(config.source_root, config.snapshot_options());

  session.append_run(run);
  return run;
}

}  // namespace veritas
