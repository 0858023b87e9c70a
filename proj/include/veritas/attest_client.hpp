#pragma once

#include <string>

#include "veritas/attest_service.hpp"
#include "veritas/model.hpp"

namespace veritas {

// Fetches a key record from the service ("http://host:port").
// Throws Errc::service_unreachable / Errc::unknown_key / Errc::malformed_response.
KeyRecord fetch_key(const std::string& endpoint, const std::string& key_id);

// Sends the 64-character digest (plus an optional session id — the only
// fields ever put on the wire) and returns the service's attestation. The
// returned signature is verified against the service-published key before
// being accepted.
Attestation request_attestation(const std::string& endpoint, const Digest& digest,
                                const std::string& session_id);

}  // namespace veritas
