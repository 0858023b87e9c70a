#include "veritas/attest_service.hpp"

#include <openssl/rand.h>

#include <json.hpp>

#include <fstream>
#include <thread>

#include "veritas/digest.hpp"
#include "veritas/errors.hpp"

namespace veritas {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kZeroChain = "0000000000000000000000000000000000000000000000000000000000000000";

std::string new_key_id() {
  unsigned char raw[8];
  if (RAND_bytes(raw, sizeof raw) != 1) fail(Errc::keystore_io_failure, "system RNG unavailable");
  return "k-" + to_hex(raw, sizeof raw);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::keystore_io_failure, "cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_atomic(const fs::path& p, std::string_view bytes) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::keystore_io_failure, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(Errc::keystore_io_failure, "write error on " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) fail(Errc::keystore_io_failure, "cannot replace " + p.string());
}

const char* to_string(KeyStatus s) { return s == KeyStatus::active ? "active" : "retired"; }

KeyStatus key_status_from_string(std::string_view s) {
  if (s == "active") return KeyStatus::active;
  if (s == "retired") return KeyStatus::retired;
  fail(Errc::keystore_io_failure, "unknown key status: " + std::string(s));
}

}  // namespace

KeyStore KeyStore::open_or_create(fs::path dir, std::string passphrase, std::string service_id) {
  if (passphrase.empty()) {
    fail(Errc::keystore_io_failure, "keystore passphrase must not be empty");
  }
  KeyStore ks;
  ks.dir_ = std::move(dir);
  ks.passphrase_ = std::move(passphrase);

  std::error_code ec;
  fs::create_directories(ks.dir_, ec);
  if (ec) fail(Errc::keystore_io_failure, "cannot create " + ks.dir_.string());

  const fs::path index = ks.dir_ / "keystore.json";
  if (fs::exists(index)) {
    json j;
    try {
      j = json::parse(read_file(index));
    } catch (const json::parse_error& e) {
      fail(Errc::keystore_io_failure, std::string("corrupt keystore index: ") + e.what());
    }
    ks.service_id_ = j.at("service_id").get<std::string>();
    for (const auto& e : j.at("keys")) {
      KeyRecord r;
      r.key_id = e.at("key_id").get<std::string>();
      r.created_at = Timestamp::parse_seconds(e.at("created_at").get<std::string>());
      r.status = key_status_from_string(e.at("status").get<std::string>());
      r.public_key_pem = read_file(ks.dir_ / (r.key_id + ".pub.pem"));
      ks.keys_.push_back(std::move(r));
    }
    for (const auto& r : ks.keys_) {
      if (r.status == KeyStatus::active) {
        ks.active_pair_ = std::make_unique<RsaKeyPair>(RsaKeyPair::from_private_pem(
            read_file(ks.dir_ / (r.key_id + ".key.pem")), ks.passphrase_));
      }
    }
    // Recover audit chain tail.
    std::ifstream log(ks.audit_log_path());
    std::string line;
    while (std::getline(log, line)) {
      if (line.empty()) continue;
      ks.last_audit_line_ = line;
      ++ks.audit_seq_;
    }
  } else {
    ks.service_id_ = service_id.empty() ? "veritas-attest" : std::move(service_id);
    ks.generate_and_add();
    ks.persist_index();
    ks.append_audit("create", ks.active_key().key_id, "", "");
  }
  return ks;
}

KeyRecord KeyStore::generate_and_add() {
  RsaKeyPair pair = RsaKeyPair::generate(4096);
  KeyRecord rec;
  rec.key_id = new_key_id();
  rec.created_at = Timestamp::now();
  rec.status = KeyStatus::active;
  rec.public_key_pem = pair.public_pem();
  write_file_atomic(dir_ / (rec.key_id + ".key.pem"), pair.private_pem(passphrase_));
  write_file_atomic(dir_ / (rec.key_id + ".pub.pem"), rec.public_key_pem);
  keys_.push_back(rec);
  active_pair_ = std::make_unique<RsaKeyPair>(std::move(pair));
  return rec;
}

void KeyStore::persist_index() const {
  json keys = json::array();
  for (const auto& r : keys_) {
    keys.push_back(json{{"created_at", r.created_at.rfc3339_seconds()},
                        {"key_id", r.key_id},
                        {"status", to_string(r.status)}});
  }
  json j{{"keys", std::move(keys)}, {"service_id", service_id_}};
  write_file_atomic(dir_ / "keystore.json", j.dump(2) + "\n");
}

KeyRecord KeyStore::active_key() const {
  for (const auto& r : keys_) {
    if (r.status == KeyStatus::active) return r;
  }
  fail(Errc::no_active_key, "keystore has no active key");
}

std::optional<KeyRecord> KeyStore::find_key(const std::string& key_id) const {
  for (const auto& r : keys_) {
    if (r.key_id == key_id) return r;
  }
  return std::nullopt;
}

KeyRecord KeyStore::rotate() {
  for (auto& r : keys_) r.status = KeyStatus::retired;
  KeyRecord rec = generate_and_add();
  persist_index();
  append_audit("rotate", rec.key_id, "", "");
  return rec;
}

std::string KeyStore::sign_with_active(std::string_view message) const {
  if (!active_pair_) fail(Errc::no_active_key, "keystore has no active key");
  return active_pair_->sign_pss_sha256(message);
}

void KeyStore::append_audit(const std::string& event, const std::string& key_id,
                            const std::string& digest_hex, const std::string& session_id) {
  json j;
  j["at"] = Timestamp::now().rfc3339_seconds();
  if (!digest_hex.empty()) j["digest"] = digest_hex;
  j["event"] = event;
  j["key_id"] = key_id;
  j["prev"] = last_audit_line_.empty() ? kZeroChain : sha256_bytes(last_audit_line_).hex;
  j["seq"] = audit_seq_;
  if (!session_id.empty()) j["session_id"] = session_id;
  const std::string line = j.dump();

  std::ofstream out(audit_log_path(), std::ios::binary | std::ios::app);
  if (!out) fail(Errc::keystore_io_failure, "cannot append to audit log");
  out << line << "\n";
  out.flush();
  if (!out) fail(Errc::keystore_io_failure, "audit log write failed");
  last_audit_line_ = line;
  ++audit_seq_;
}

bool KeyStore::audit_chain_valid(const fs::path& log_path) {
  std::ifstream in(log_path);
  if (!in) return false;
  std::string line;
  std::string prev_line;
  std::uint64_t seq = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      return false;
    }
    const std::string expect_prev = prev_line.empty() ? kZeroChain : sha256_bytes(prev_line).hex;
    if (j.value("prev", "") != expect_prev) return false;
    if (j.value("seq", std::uint64_t(0)) != seq) return false;
    prev_line = line;
    ++seq;
  }
  return seq > 0;
}

// ---- AttestService ---------------------------------------------------------

AttestService::AttestService(KeyStore keystore) : store_(std::move(keystore)) {}

Attestation AttestService::sign_digest(const std::string& digest_hex,
                                       const std::string& session_id) {
  if (!is_hex_digest(digest_hex)) {
    fail(Errc::malformed_digest, "expected 64 lowercase hex characters");
  }
  std::lock_guard<std::mutex> lock(mu_);
  const KeyRecord key = store_.active_key();
  Attestation att;
  att.session_digest = Digest{digest_hex};
  att.signature_base64 = base64_encode(store_.sign_with_active(digest_hex));
  att.algorithm = "RSA-PSS-SHA256";
  att.key_bits = 4096;
  att.key_id = key.key_id;
  att.service_id = store_.service_id();
  att.signed_at = Timestamp::now();
  store_.append_audit("sign", key.key_id, digest_hex, session_id);
  return att;
}

std::optional<KeyRecord> AttestService::get_public_key(const std::string& key_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return store_.find_key(key_id);
}

KeyRecord AttestService::rotate_key() {
  std::lock_guard<std::mutex> lock(mu_);
  return store_.rotate();
}

KeyRecord AttestService::active_key() const {
  std::lock_guard<std::mutex> lock(mu_);
  return store_.active_key();
}

}  // namespace veritas
