#include "veritas/sealer.hpp"

#include <map>

#include "veritas/attest_client.hpp"
#include "veritas/canonical.hpp"
#include "veritas/errors.hpp"
#include "veritas/hmc.hpp"
#include "veritas/report.hpp"
#include "veritas/zipfile.hpp"

namespace veritas {

namespace {

std::string transcript_entry_name(std::uint32_t run_index, StreamKind kind) {
  return "transcripts/run-" + std::to_string(run_index) +
         (kind == StreamKind::stdout_stream ? ".stdout" : ".stderr");
}

}  // namespace

SealResult seal(SessionRecord session, const SealInputs& inputs,
                const std::string& service_endpoint, const std::filesystem::path& output_path) {
  if (session.sealed()) fail(Errc::session_sealed, "session is already sealed");
  if (session.runs().empty()) fail(Errc::empty_session, "nothing to seal: no runs recorded");

  const auto violations = validate_session(session);
  if (!violations.empty()) {
    fail(Errc::state_tampered, "session state is not internally consistent: " + violations.front());
  }

  session.set_hmc(evaluate_hmc(session));
  session.finalize();

  const std::string canonical = canonicalize(session);
  const Digest digest = sha256_bytes(canonical);

  // Collect bundle payloads before talking to the service; an inconsistent
  // local store must not burn an attestation.
  std::map<std::string, std::string> entries;
  entries["session.cnf"] = canonical;
  entries["report.txt"] = render_report(session);
  for (const auto& run : session.runs()) {
    for (StreamKind kind : {StreamKind::stdout_stream, StreamKind::stderr_stream}) {
      std::string bytes = inputs.transcript_bytes(run.run_index, kind);
      const Digest& expect =
          kind == StreamKind::stdout_stream ? run.stdout_digest : run.stderr_digest;
      if (sha256_bytes(bytes) != expect) {
        fail(Errc::state_tampered,
             "stored transcript for run " + std::to_string(run.run_index) +
                 " does not match its recorded digest");
      }
      entries[transcript_entry_name(run.run_index, kind)] = std::move(bytes);
    }
  }
  // Post-run source files from the content store; the final run's snapshot
  // is what the bundle carries.
  const SourceSnapshot& final_sources = session.runs().back().sources_after;
  for (const auto& f : final_sources.files) {
    if (f.is_error() || f.is_symlink()) continue;
    auto bytes = inputs.source_bytes(f.digest);
    if (!bytes || sha256_bytes(*bytes) != f.digest) {
      fail(Errc::state_tampered, "captured source content missing or altered for " + f.path);
    }
    entries["sources/" + f.path] = std::move(*bytes);
  }

  Attestation attestation = request_attestation(service_endpoint, digest, session.session_id());
  entries["attestation.json"] = attestation_to_text(attestation);

  std::vector<std::pair<std::string, Digest>> manifest;
  manifest.reserve(entries.size());
  for (const auto& [name, bytes] : entries) manifest.emplace_back(name, sha256_bytes(bytes));
  entries["manifest.txt"] = render_manifest(manifest);

  ZipWriter writer(output_path);
  for (const auto& [name, bytes] : entries) writer.add_entry(name, bytes);
  writer.finish();

  // Read-back check: the bundled canonical bytes must hash to the digest
  // the service signed.
  ZipReader reader(output_path);
  if (sha256_bytes(reader.read("session.cnf")) != digest) {
    std::filesystem::remove(output_path);
    fail(Errc::digest_mismatch_on_readback, "bundle write verification failed");
  }

  return SealResult{std::move(session), std::move(attestation), digest, output_path};
}

}  // namespace veritas
