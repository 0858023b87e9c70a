#include "veritas/errors.hpp"

namespace veritas {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::session_sealed: return "session-sealed";
    case Errc::session_still_open: return "session-still-open";
    case Errc::empty_session: return "empty-session";
    case Errc::state_tampered: return "state-tampered";
    case Errc::process_not_found: return "process-not-found";
    case Errc::spawn_failure: return "spawn-failure";
    case Errc::transcript_io_failure: return "transcript-store-io-failure";
    case Errc::malformed_digest: return "malformed-digest";
    case Errc::no_active_key: return "no-active-key";
    case Errc::unknown_key: return "unknown-key";
    case Errc::keystore_io_failure: return "keystore-io-failure";
    case Errc::service_unreachable: return "service-unreachable";
    case Errc::signature_invalid: return "signature-invalid";
    case Errc::malformed_response: return "malformed-response";
    case Errc::digest_mismatch_on_readback: return "digest-mismatch-on-readback";
    case Errc::unreadable_bundle: return "unreadable-bundle";
    case Errc::key_unavailable: return "key-unavailable";
    case Errc::already_initialized: return "already-initialized";
    case Errc::not_initialized: return "not-initialized";
    case Errc::unwritable_directory: return "unwritable-directory";
    case Errc::session_locked: return "session-locked";
    case Errc::bad_config: return "bad-config";
    case Errc::bad_path: return "bad-path";
    case Errc::io_error: return "io-error";
  }
  return "unknown-error";
}

}  // namespace veritas
