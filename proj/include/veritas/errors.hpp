#pragma once

#include <stdexcept>
#include <string>

namespace veritas {

// Stable error codes. CLI maps these to exit codes and messages; tests
// assert on them instead of message text.
enum class Errc {
  // session / model
  session_sealed,
  session_still_open,
  empty_session,
  state_tampered,
  process_not_found,
  // observer
  spawn_failure,
  transcript_io_failure,
  // attestation service
  malformed_digest,
  no_active_key,
  unknown_key,
  keystore_io_failure,
  // sealer / client
  service_unreachable,
  signature_invalid,
  malformed_response,
  digest_mismatch_on_readback,
  // verifier
  unreadable_bundle,
  key_unavailable,
  // cli / store
  already_initialized,
  not_initialized,
  unwritable_directory,
  session_locked,
  bad_config,
  bad_path,
  io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace veritas
