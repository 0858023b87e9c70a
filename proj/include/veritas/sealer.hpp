#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "veritas/model.hpp"

namespace veritas {

// Resolves the raw bytes the bundle needs beyond the session record: run
// transcripts and the post-run source file contents captured at execution
// time (content-addressed by digest).
struct SealInputs {
  std::function<std::string(std::uint32_t run_index, StreamKind stream)> transcript_bytes;
  std::function<std::optional<std::string>(const Digest& content)> source_bytes;
};

struct SealResult {
  SessionRecord sealed_session;
  Attestation attestation;
  Digest digest;
  std::filesystem::path bundle_path;
};

// Closes the session: computes and embeds the HMC report, seals, sends the
// 64-character digest to the service, verifies and stores the returned
// attestation, and writes the bundle zip. All-or-nothing: any failure
// throws and the caller's persisted state stays open. The session is taken
// by value so no half-sealed record is ever observable.
//
// Bundle layout: session.cnf, attestation.json, report.txt, manifest.txt,
// transcripts/run-<i>.stdout|.stderr, sources/<path...>.
SealResult seal(SessionRecord session, const SealInputs& inputs,
                const std::string& service_endpoint, const std::filesystem::path& output_path);

}  // namespace veritas
