#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "veritas/attest_service.hpp"
#include "veritas/model.hpp"

namespace veritas {

enum class FailureCode {
  malformed_attestation,
  unknown_key,
  signature_invalid,
  signature_digest_mismatch,
  canonical_parse_error,
  invariant_violation,
  missing_entry,
  transcript_digest_mismatch,
  source_digest_mismatch,
  hmc_recompute_mismatch,
  report_mismatch,
  manifest_mismatch,
  claim_mismatch,
  claim_metric_absent,
};

const char* failure_code_name(FailureCode code);

struct Failure {
  FailureCode code;
  std::string detail;
};

struct Verdict {
  std::vector<Failure> failures;

  bool pass() const { return failures.empty(); }
  const char* status() const { return pass() ? "PASS" : "FAIL"; }
  bool has(FailureCode code) const;
};

// Where the verifier obtains service public keys. get() returns nullopt
// when the source authoritatively does not know the key id (verification
// FAILs with unknown-key); it throws Errc::key_unavailable when keys cannot
// be obtained at all (verification could not be performed — distinct from
// FAIL).
class KeySource {
public:
  virtual ~KeySource() = default;
  virtual std::optional<KeyRecord> get(const std::string& key_id) = 0;
};

class ServiceKeySource final : public KeySource {
public:
  explicit ServiceKeySource(std::string endpoint) : endpoint_(std::move(endpoint)) {}
  std::optional<KeyRecord> get(const std::string& key_id) override;

private:
  std::string endpoint_;
};

// Reads a key file as saved from GET /v1/keys/{id}: a JSON object with
// key_id/public_key fields, or {"keys": [...]} with several.
class FileKeySource final : public KeySource {
public:
  explicit FileKeySource(std::filesystem::path path) : path_(std::move(path)) {}
  std::optional<KeyRecord> get(const std::string& key_id) override;

private:
  std::filesystem::path path_;
};

// Full bundle verification. Performs, in order: attestation parse, key
// lookup, RSA-PSS signature check over the ASCII hex digest, session.cnf
// re-hash against the signed digest, canonical parse + structural
// invariants, re-hash of every transcript and source entry, HMC
// recomputation, report regeneration, and manifest regeneration. Failures
// accumulate; all steps run where possible.
//
// Throws Errc::unreadable_bundle when the container cannot be opened and
// Errc::key_unavailable when keys were unobtainable and nothing else
// already failed.
Verdict verify_bundle(const std::filesystem::path& bundle_path, KeySource& keys);

struct Claim {
  std::string name;
  std::string value;  // lexical; parsed numerically for tolerance claims
  bool exact = true;
  double epsilon = 0.0;
};

// One claim per line: name<TAB>value<TAB>exact  or  name<TAB>value<TAB>±epsilon
std::vector<Claim> parse_claims_file(const std::filesystem::path& path);
std::vector<Claim> parse_claims_text(std::string_view text);

// Checks claims against the final occurrence of each named metric in a
// bundle that itself verifies; bundle failures propagate into the verdict.
Verdict verify_claims(const std::filesystem::path& bundle_path, KeySource& keys,
                      const std::vector<Claim>& claims);

}  // namespace veritas
