#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "veritas/keys.hpp"
#include "veritas/model.hpp"

namespace veritas {

enum class KeyStatus { active, retired };

struct KeyRecord {
  std::string key_id;
  std::string public_key_pem;
  Timestamp created_at;
  KeyStatus status = KeyStatus::active;
};

struct AuditEntry {
  std::uint64_t seq = 0;
  std::string prev_hex;  // sha256 of the previous line; 64 zeros for the first
  Timestamp at;
  std::string event;  // "sign" | "rotate"
  std::string key_id;
  std::string digest_hex;   // sign events
  std::string session_id;   // sign events, optional
};

// Encrypted on-disk keystore: one active 4096-bit key, retired keys kept
// resolvable forever, and an append-only hash-chained audit log. Private
// keys are PKCS#8 PEM encrypted under a passphrase supplied at startup;
// they never leave this directory.
class KeyStore {
public:
  static KeyStore open_or_create(std::filesystem::path dir, std::string passphrase,
                                 std::string service_id);

  const std::string& service_id() const { return service_id_; }
  KeyRecord active_key() const;  // throws no_active_key
  std::optional<KeyRecord> find_key(const std::string& key_id) const;
  std::vector<KeyRecord> all_keys() const { return keys_; }

  KeyRecord rotate();

  std::string sign_with_active(std::string_view message) const;  // raw signature bytes

  void append_audit(const std::string& event, const std::string& key_id,
                    const std::string& digest_hex, const std::string& session_id);

  std::filesystem::path audit_log_path() const { return dir_ / "audit.log"; }

  // Recomputes the hash chain; returns false on any break.
  static bool audit_chain_valid(const std::filesystem::path& log_path);

private:
  KeyStore() = default;
  void persist_index() const;
  KeyRecord generate_and_add();

  std::filesystem::path dir_;
  std::string passphrase_;
  std::string service_id_;
  std::vector<KeyRecord> keys_;
  std::unique_ptr<RsaKeyPair> active_pair_;
  std::string last_audit_line_;
  std::uint64_t audit_seq_ = 0;
};

// The attestation operation set, independent of any transport. Signing and
// rotation are mutually exclusive; concurrent signing requests serialize on
// the keystore.
class AttestService {
public:
  explicit AttestService(KeyStore keystore);

  // digest_hex must match ^[0-9a-f]{64}$; the signature is RSA-PSS-SHA256
  // over exactly those 64 ASCII bytes.
  Attestation sign_digest(const std::string& digest_hex, const std::string& session_id = "");

  std::optional<KeyRecord> get_public_key(const std::string& key_id) const;
  KeyRecord rotate_key();
  const std::string& service_id() const { return store_.service_id(); }
  KeyRecord active_key() const;

private:
  mutable std::mutex mu_;
  KeyStore store_;
};

// HTTP front end:
//   POST /v1/attest          {"digest": "<64hex>", "session_id": "<32hex>"?}
//   GET  /v1/keys/{key_id}
class AttestHttpServer {
public:
  explicit AttestHttpServer(AttestService& service);
  ~AttestHttpServer();

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

  // Test hook: observes every raw request body exactly as received.
  std::function<void(const std::string& path, const std::string& body)> on_request;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace veritas
