#pragma once

#include <string>
#include <string_view>

#include "veritas/model.hpp"

namespace veritas {

// The canonical byte encoding of a session: a JSON tree with keys sorted
// byte-lexicographically, no insignificant whitespace, UTF-8, integers in
// minimal decimal form, timestamps as RFC 3339 strings, metric values as
// their lexical tokens, and byte streams represented only by their digests.
// Two sessions with equal field values produce identical bytes on any
// platform. The encoding doubles as the on-disk "session.cnf" file inside
// bundles and (with state "open") as the working session state format.
//
// Throws Errc::session_still_open unless the session is sealed.
std::string canonicalize(const SessionRecord& session);

// SHA-256 over canonicalize(session).
Digest session_digest(const SessionRecord& session);

// Same encoding without the sealed-state requirement; used for working
// session state on disk.
std::string session_to_text(const SessionRecord& session);

// Strict inverse of session_to_text/canonicalize: rejects unknown keys,
// wrong types, and malformed field formats. Structural invariants beyond
// shape are checked separately via validate_session.
SessionRecord session_from_text(std::string_view bytes);

// Digest over the canonical encoding of one snapshot; the "source code
// hash" shown in reports.
Digest snapshot_digest(const SourceSnapshot& snapshot);

// attestation.json bundle entry (sorted keys, compact).
std::string attestation_to_text(const Attestation& att);
Attestation attestation_from_text(std::string_view bytes);

}  // namespace veritas
