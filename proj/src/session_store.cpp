#include "veritas/session_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>

#include "veritas/canonical.hpp"
#include "veritas/errors.hpp"

namespace veritas {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p, Errc on_error) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(on_error, "cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, std::string_view bytes) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(Errc::io_error, "write error on " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) fail(Errc::io_error, "cannot replace " + p.string());
}

}  // namespace

SessionLock::SessionLock(const fs::path& dir) {
  const fs::path lock_path = dir / "lock";
  fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0600);
  if (fd_ < 0) fail(Errc::io_error, "cannot open lock file " + lock_path.string());
  if (flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    fail(Errc::session_locked, "another kveritas invocation holds this session");
  }
}

SessionLock::~SessionLock() {
  if (fd_ >= 0) ::close(fd_);  // flock released with the descriptor
}

SessionStore SessionStore::init(const fs::path& work_dir, const ToolConfig& config,
                                const SessionRecord& session) {
  const fs::path dir = work_dir / kDirName;
  std::error_code ec;
  if (fs::exists(dir)) fail(Errc::already_initialized, dir.string() + " already exists");
  fs::create_directories(dir / "objects", ec);
  if (ec) fail(Errc::unwritable_directory, "cannot create " + dir.string());

  SessionStore store;
  store.dir_ = dir;
  write_file(dir / "config", render_config(config));
  store.save_session(session);
  return store;
}

SessionStore SessionStore::open(const fs::path& work_dir) {
  const fs::path dir = work_dir / kDirName;
  if (!fs::is_directory(dir)) {
    fail(Errc::not_initialized, "no " + std::string(kDirName) + " directory here; run init first");
  }
  SessionStore store;
  store.dir_ = dir;
  return store;
}

SessionRecord SessionStore::load_session() const {
  const std::string text = read_file(dir_ / "session.json", Errc::not_initialized);
  const std::string sum = read_file(dir_ / "state.sum", Errc::state_tampered);
  if (sha256_bytes(text).hex != sum) {
    fail(Errc::state_tampered,
         "session.json does not match its recorded digest; the session state was edited");
  }
  // A marker naming a live pid means a run is mid-flight somewhere.
  const fs::path marker = dir_ / "run-in-progress";
  if (fs::exists(marker)) {
    const std::string pid_text = read_file(marker, Errc::io_error);
    const pid_t pid = static_cast<pid_t>(std::strtol(pid_text.c_str(), nullptr, 10));
    if (pid > 0 && fs::exists("/proc/" + std::to_string(pid))) {
      fail(Errc::session_still_open, "a run is in progress (pid " + std::to_string(pid) + ")");
    }
    std::error_code ec;
    fs::remove(marker, ec);  // stale marker from a crashed run
  }
  return session_from_text(text);
}

void SessionStore::save_session(const SessionRecord& session) const {
  const std::string text = session_to_text(session);
  write_file(dir_ / "session.json", text);
  write_file(dir_ / "state.sum", sha256_bytes(text).hex);
}

ToolConfig SessionStore::load_config() const { return load_config_file(dir_ / "config"); }

fs::path SessionStore::transcript_path(std::uint32_t run_index, StreamKind kind) const {
  return dir_ / ("run-" + std::to_string(run_index) +
                 (kind == StreamKind::stdout_stream ? ".stdout" : ".stderr"));
}

void SessionStore::capture_sources(const fs::path& source_root,
                                   const SourceSnapshot& snapshot) const {
  const fs::path objects = dir_ / "objects";
  for (const auto& f : snapshot.files) {
    if (f.is_error() || f.is_symlink()) continue;
    const fs::path dest = objects / f.digest.hex;
    if (fs::exists(dest)) continue;  // content-addressed: already captured
    std::error_code ec;
    fs::copy_file(source_root / fs::path(f.path), dest, fs::copy_options::overwrite_existing, ec);
    if (ec) {
      fail(Errc::io_error, "cannot capture source " + f.path + ": " + ec.message());
    }
    // The copy must still match the snapshot digest (the file may have
    // changed between hashing and capture).
    if (sha256_file(dest) != f.digest) {
      fs::remove(dest, ec);
      fail(Errc::io_error, "source file changed while capturing: " + f.path);
    }
  }
}

SealInputs SessionStore::seal_inputs() const {
  SealInputs inputs;
  const fs::path dir = dir_;
  inputs.transcript_bytes = [dir, this](std::uint32_t run_index, StreamKind kind) {
    return read_file(transcript_path(run_index, kind), Errc::state_tampered);
  };
  inputs.source_bytes = [dir](const Digest& digest) -> std::optional<std::string> {
    const fs::path p = dir / "objects" / digest.hex;
    if (!fs::exists(p)) return std::nullopt;
    return read_file(p, Errc::state_tampered);
  };
  return inputs;
}

SessionStore::RunMarker::RunMarker(fs::path path) : path_(std::move(path)) {
  write_file(path_, std::to_string(getpid()) + "\n");
}

SessionStore::RunMarker::~RunMarker() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::unique_ptr<SessionStore::RunMarker> SessionStore::begin_run() const {
  return std::make_unique<RunMarker>(dir_ / "run-in-progress");
}

}  // namespace veritas
