#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "veritas/config.hpp"
#include "veritas/model.hpp"
#include "veritas/sealer.hpp"

namespace veritas {

// Exclusive advisory lock on a session directory; one CLI invocation at a
// time. Released on destruction (and by the kernel on crash).
class SessionLock {
public:
  explicit SessionLock(const std::filesystem::path& dir);  // throws session_locked
  ~SessionLock();
  SessionLock(const SessionLock&) = delete;
  SessionLock& operator=(const SessionLock&) = delete;

private:
  int fd_ = -1;
};

// The `.veritas/` directory: working session state (with a digest sidecar
// so casual file edits are detectable), config, transcripts, and a
// content-addressed store of source files captured at execution time.
class SessionStore {
public:
  static constexpr const char* kDirName = ".veritas";

  // Creates the directory and persists the initial state; throws
  // already_initialized / unwritable_directory.
  static SessionStore init(const std::filesystem::path& work_dir, const ToolConfig& config,
                           const SessionRecord& session);

  // Opens an existing store; throws not_initialized.
  static SessionStore open(const std::filesystem::path& work_dir);

  // Throws state_tampered when session.json does not match its recorded
  // digest, and session_still_open when a live run marker is present.
  SessionRecord load_session() const;
  void save_session(const SessionRecord& session) const;

  ToolConfig load_config() const;

  std::filesystem::path dir() const { return dir_; }
  std::filesystem::path transcript_path(std::uint32_t run_index, StreamKind kind) const;

  // Copies every regular file of the snapshot into the content store.
  void capture_sources(const std::filesystem::path& source_root,
                       const SourceSnapshot& snapshot) const;

  SealInputs seal_inputs() const;

  // Run-in-progress marker handling. A marker naming a live pid means a run
  // is in flight; a stale marker from a crashed run is cleared.
  class RunMarker {
  public:
    explicit RunMarker(std::filesystem::path path);
    ~RunMarker();
    RunMarker(const RunMarker&) = delete;
    RunMarker& operator=(const RunMarker&) = delete;

  private:
    std::filesystem::path path_;
  };
  std::unique_ptr<RunMarker> begin_run() const;  // throws session_still_open if live

private:
  std::filesystem::path dir_;
};

}  // namespace veritas
