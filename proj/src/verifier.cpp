#include "veritas/verifier.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "veritas/attest_client.hpp"
#include "veritas/canonical.hpp"
#include "veritas/errors.hpp"
#include "veritas/hmc.hpp"
#include "veritas/keys.hpp"
#include "veritas/report.hpp"
#include "veritas/zipfile.hpp"

namespace veritas {

using json = nlohmann::json;

const char* failure_code_name(FailureCode code) {
  switch (code) {
    case FailureCode::malformed_attestation: return "malformed-attestation";
    case FailureCode::unknown_key: return "unknown-key";
    case FailureCode::signature_invalid: return "signature-invalid";
    case FailureCode::signature_digest_mismatch: return "signature-digest-mismatch";
    case FailureCode::canonical_parse_error: return "canonical-parse-error";
    case FailureCode::invariant_violation: return "invariant-violation";
    case FailureCode::missing_entry: return "missing-entry";
    case FailureCode::transcript_digest_mismatch: return "transcript-digest-mismatch";
    case FailureCode::source_digest_mismatch: return "source-digest-mismatch";
    case FailureCode::hmc_recompute_mismatch: return "hmc-recompute-mismatch";
    case FailureCode::report_mismatch: return "report-mismatch";
    case FailureCode::manifest_mismatch: return "manifest-mismatch";
    case FailureCode::claim_mismatch: return "claim-mismatch";
    case FailureCode::claim_metric_absent: return "claim-metric-absent";
  }
  return "unknown";
}

bool Verdict::has(FailureCode code) const {
  for (const auto& f : failures) {
    if (f.code == code) return true;
  }
  return false;
}

std::optional<KeyRecord> ServiceKeySource::get(const std::string& key_id) {
  try {
    return fetch_key(endpoint_, key_id);
  } catch (const Error& e) {
    if (e.code() == Errc::unknown_key) return std::nullopt;
    throw Error(Errc::key_unavailable, e.what());
  }
}

std::optional<KeyRecord> FileKeySource::get(const std::string& key_id) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(Errc::key_unavailable, "cannot read key file " + path_.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::key_unavailable, std::string("key file is not JSON: ") + e.what());
  }
  auto record_from = [](const json& e) {
    KeyRecord r;
    r.key_id = e.at("key_id").get<std::string>();
    r.public_key_pem = e.at("public_key").get<std::string>();
    if (e.contains("created_at")) {
      r.created_at = Timestamp::parse_seconds(e.at("created_at").get<std::string>());
    }
    r.status = e.value("status", "active") == "retired" ? KeyStatus::retired : KeyStatus::active;
    return r;
  };
  try {
    if (j.contains("keys")) {
      for (const auto& e : j.at("keys")) {
        if (e.at("key_id").get<std::string>() == key_id) return record_from(e);
      }
      return std::nullopt;
    }
    if (j.at("key_id").get<std::string>() == key_id) return record_from(j);
  } catch (const json::exception& e) {
    throw Error(Errc::key_unavailable, std::string("key file malformed: ") + e.what());
  }
  return std::nullopt;
}

namespace {

std::string transcript_entry_name(std::uint32_t run_index, StreamKind kind) {
  return "transcripts/run-" + std::to_string(run_index) +
         (kind == StreamKind::stdout_stream ? ".stdout" : ".stderr");
}

}  // namespace

Verdict verify_bundle(const std::filesystem::path& bundle_path, KeySource& keys) {
  Verdict verdict;
  auto add = [&](FailureCode code, std::string detail) {
    verdict.failures.push_back({code, std::move(detail)});
  };

  ZipReader reader(bundle_path);  // throws unreadable_bundle

  std::map<std::string, std::string> entries;
  for (const auto& name : reader.entry_names()) entries[name] = reader.read(name);

  // (1) attestation
  std::optional<Attestation> att;
  if (!entries.count("attestation.json")) {
    add(FailureCode::missing_entry, "attestation.json");
  } else {
    try {
      Attestation a = attestation_from_text(entries.at("attestation.json"));
      if (a.algorithm != "RSA-PSS-SHA256") {
        add(FailureCode::malformed_attestation, "unexpected algorithm " + a.algorithm);
      } else if (a.key_bits != 4096) {
        add(FailureCode::malformed_attestation,
            "unexpected key size " + std::to_string(a.key_bits));
      } else {
        att = std::move(a);
      }
    } catch (const Error& e) {
      add(FailureCode::malformed_attestation, e.what());
    }
  }

  // (2) key lookup; unavailability is remembered, not immediately fatal,
  // so offline checks still run.
  std::optional<KeyRecord> key;
  std::optional<Error> key_unavailable;
  if (att) {
    try {
      key = keys.get(att->key_id);
      if (!key) add(FailureCode::unknown_key, att->key_id);
    } catch (const Error& e) {
      key_unavailable = e;
    }
  }

  // (3) signature over the ASCII hex of the digest
  if (att && key) {
    bool ok = false;
    try {
      PublicKey pub = PublicKey::from_pem(key->public_key_pem);
      ok = pub.verify_pss_sha256(att->session_digest.hex, base64_decode(att->signature_base64));
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) add(FailureCode::signature_invalid, "attestation signature does not verify");
  }

  // (4) re-hash session.cnf against the signed digest
  std::optional<std::string> canonical;
  if (!entries.count("session.cnf")) {
    add(FailureCode::missing_entry, "session.cnf");
  } else {
    canonical = entries.at("session.cnf");
    if (att && sha256_bytes(*canonical) != att->session_digest) {
      add(FailureCode::signature_digest_mismatch,
          "session.cnf does not hash to the signed digest");
    }
  }

  // (5) canonical parse + structural invariants
  std::optional<SessionRecord> session;
  if (canonical) {
    try {
      SessionRecord s = session_from_text(*canonical);
      if (session_to_text(s) != *canonical) {
        add(FailureCode::canonical_parse_error, "session.cnf is not in canonical form");
      }
      session = std::move(s);
    } catch (const Error& e) {
      add(FailureCode::canonical_parse_error, e.what());
    }
  }
  if (session) {
    if (!session->sealed()) {
      add(FailureCode::invariant_violation, "bundled session is not sealed");
    }
    if (session->runs().empty()) {
      add(FailureCode::invariant_violation, "sealed bundle carries no runs");
    }
    for (const auto& v : validate_session(*session)) {
      add(FailureCode::invariant_violation, v);
    }
  }

  // (6) transcripts and captured sources vs the digests inside the record
  std::set<std::string> expected{"attestation.json", "manifest.txt", "report.txt", "session.cnf"};
  if (session) {
    for (const auto& run : session->runs()) {
      for (StreamKind kind : {StreamKind::stdout_stream, StreamKind::stderr_stream}) {
        const std::string name = transcript_entry_name(run.run_index, kind);
        expected.insert(name);
        const Digest& want =
            kind == StreamKind::stdout_stream ? run.stdout_digest : run.stderr_digest;
        const std::uint64_t want_bytes =
            kind == StreamKind::stdout_stream ? run.stdout_bytes : run.stderr_bytes;
        auto it = entries.find(name);
        if (it == entries.end()) {
          add(FailureCode::missing_entry, name);
          continue;
        }
        if (it->second.size() != want_bytes || sha256_bytes(it->second) != want) {
          add(FailureCode::transcript_digest_mismatch, name);
        }
      }
    }
    if (!session->runs().empty()) {
      for (const auto& f : session->runs().back().sources_after.files) {
        if (f.is_error() || f.is_symlink()) continue;
        const std::string name = "sources/" + f.path;
        expected.insert(name);
        auto it = entries.find(name);
        if (it == entries.end()) {
          add(FailureCode::missing_entry, name);
          continue;
        }
        if (it->second.size() != f.size_bytes || sha256_bytes(it->second) != f.digest) {
          add(FailureCode::source_digest_mismatch, name);
        }
      }
    }
  }

  // (7) HMC recomputation
  if (session && !session->runs().empty()) {
    if (!session->hmc()) {
      add(FailureCode::hmc_recompute_mismatch, "sealed session carries no HMC report");
    } else {
      const HmcReport recomputed = evaluate_hmc(*session);
      if (!(recomputed == *session->hmc())) {
        add(FailureCode::hmc_recompute_mismatch,
            "embedded HMC report differs from recomputation (recomputed " +
                recomputed.score_string() + " " + recomputed.verdict() + ")");
      }
    }
  }

  // (8) report regeneration
  if (session && session->sealed()) {
    if (!entries.count("report.txt")) {
      add(FailureCode::missing_entry, "report.txt");
    } else if (render_report(*session) != entries.at("report.txt")) {
      add(FailureCode::report_mismatch, "report.txt is not the rendering of the sealed session");
    }
  }

  // manifest regeneration binds every remaining byte of the container,
  // including attestation metadata the signature itself cannot cover.
  if (!entries.count("manifest.txt")) {
    add(FailureCode::missing_entry, "manifest.txt");
  } else {
    std::vector<std::pair<std::string, Digest>> manifest;
    for (const auto& [name, bytes] : entries) {
      if (name == "manifest.txt") continue;
      manifest.emplace_back(name, sha256_bytes(bytes));
    }
    if (render_manifest(manifest) != entries.at("manifest.txt")) {
      add(FailureCode::manifest_mismatch, "manifest.txt does not match bundle contents");
    }
  }
  if (session) {
    for (const auto& [name, bytes] : entries) {
      if (!expected.count(name)) {
        add(FailureCode::manifest_mismatch, "unexpected bundle entry " + name);
      }
    }
  }

  if (verdict.pass() && key_unavailable) throw *key_unavailable;
  return verdict;
}

std::vector<Claim> parse_claims_text(std::string_view text) {
  std::vector<Claim> claims;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      fail(Errc::bad_config,
           "claims line " + std::to_string(line_no) + ": expected name<TAB>value<TAB>mode");
    }
    Claim c;
    c.name = line.substr(0, t1);
    c.value = line.substr(t1 + 1, t2 - t1 - 1);
    std::string mode = line.substr(t2 + 1);
    if (c.name.empty() || c.value.empty()) {
      fail(Errc::bad_config, "claims line " + std::to_string(line_no) + ": empty field");
    }
    if (mode == "exact") {
      c.exact = true;
    } else {
      // "±0.01" (UTF-8) or the ASCII spelling "+-0.01".
      if (mode.rfind("\xc2\xb1", 0) == 0) {
        mode = mode.substr(2);
      } else if (mode.rfind("+-", 0) == 0) {
        mode = mode.substr(2);
      } else {
        fail(Errc::bad_config,
             "claims line " + std::to_string(line_no) + ": mode must be 'exact' or '±<epsilon>'");
      }
      char* end = nullptr;
      c.epsilon = std::strtod(mode.c_str(), &end);
      if (end == nullptr || *end != '\0' || c.epsilon < 0) {
        fail(Errc::bad_config, "claims line " + std::to_string(line_no) + ": bad epsilon");
      }
      c.exact = false;
    }
    claims.push_back(std::move(c));
    if (nl == text.size()) break;
  }
  return claims;
}

std::vector<Claim> parse_claims_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::bad_path, "cannot read claims manifest " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_claims_text(text);
}

Verdict verify_claims(const std::filesystem::path& bundle_path, KeySource& keys,
                      const std::vector<Claim>& claims) {
  Verdict verdict = verify_bundle(bundle_path, keys);
  if (!verdict.pass()) return verdict;

  ZipReader reader(bundle_path);
  const SessionRecord session = session_from_text(reader.read("session.cnf"));
  const auto finals = final_metrics(session);

  for (const auto& claim : claims) {
    const MetricRecord* found = nullptr;
    for (const auto& m : finals) {
      if (m.name == claim.name) {
        found = &m;
        break;
      }
    }
    if (!found) {
      verdict.failures.push_back({FailureCode::claim_metric_absent, claim.name});
      continue;
    }
    if (claim.exact) {
      if (found->lexical_value != claim.value) {
        verdict.failures.push_back(
            {FailureCode::claim_mismatch,
             claim.name + ": claimed '" + claim.value + "', attested '" + found->lexical_value +
                 "'"});
      }
    } else {
      char* end = nullptr;
      const double claimed = std::strtod(claim.value.c_str(), &end);
      if (end == nullptr || *end != '\0') {
        verdict.failures.push_back(
            {FailureCode::claim_mismatch, claim.name + ": claimed value is not numeric"});
        continue;
      }
      const double delta = std::abs(claimed - found->numeric_value);
      if (!(delta <= claim.epsilon)) {
        verdict.failures.push_back(
            {FailureCode::claim_mismatch,
             claim.name + ": |" + claim.value + " - " + found->lexical_value + "| exceeds epsilon"});
      }
    }
  }
  return verdict;
}

}  // namespace veritas
