#include "veritas/attest_client.hpp"

#include <httplib.h>

#include <json.hpp>

#include "veritas/errors.hpp"
#include "veritas/keys.hpp"

namespace veritas {

using json = nlohmann::json;

namespace {

std::string get_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    fail(Errc::malformed_response, std::string("response missing '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

KeyRecord fetch_key(const std::string& endpoint, const std::string& key_id) {
  httplib::Client client(endpoint);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(10, 0);
  auto res = client.Get("/v1/keys/" + key_id);
  if (!res) fail(Errc::service_unreachable, "cannot reach " + endpoint);
  if (res->status == 404) fail(Errc::unknown_key, key_id);
  if (res->status != 200) {
    fail(Errc::malformed_response, "key fetch returned " + std::to_string(res->status));
  }
  json j;
  try {
    j = json::parse(res->body);
  } catch (const json::parse_error&) {
    fail(Errc::malformed_response, "key response is not JSON");
  }
  KeyRecord rec;
  rec.key_id = get_field(j, "key_id");
  rec.public_key_pem = get_field(j, "public_key");
  rec.created_at = Timestamp::parse_seconds(get_field(j, "created_at"));
  const std::string status = get_field(j, "status");
  if (status != "active" && status != "retired") {
    fail(Errc::malformed_response, "unknown key status: " + status);
  }
  rec.status = status == "active" ? KeyStatus::active : KeyStatus::retired;
  return rec;
}

Attestation request_attestation(const std::string& endpoint, const Digest& digest,
                                const std::string& session_id) {
  if (!is_hex_digest(digest.hex)) fail(Errc::malformed_digest, "digest is not 64 lowercase hex");

  json body{{"digest", digest.hex}};
  if (!session_id.empty()) body["session_id"] = session_id;

  httplib::Client client(endpoint);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(30, 0);
  auto res = client.Post("/v1/attest", body.dump(), "application/json");
  if (!res) fail(Errc::service_unreachable, "cannot reach " + endpoint);
  if (res->status == 400) fail(Errc::malformed_digest, "service rejected the digest");
  if (res->status != 200) {
    fail(Errc::malformed_response, "attest returned " + std::to_string(res->status));
  }
  json j;
  try {
    j = json::parse(res->body);
  } catch (const json::parse_error&) {
    fail(Errc::malformed_response, "attest response is not JSON");
  }

  Attestation att;
  att.session_digest = digest;
  att.signature_base64 = get_field(j, "signature");
  att.algorithm = get_field(j, "algorithm");
  att.key_id = get_field(j, "key_id");
  att.service_id = get_field(j, "service_id");
  att.signed_at = Timestamp::parse_seconds(get_field(j, "signed_at"));
  if (!j.contains("key_bits") || !j.at("key_bits").is_number_integer()) {
    fail(Errc::malformed_response, "response missing 'key_bits'");
  }
  att.key_bits = j.at("key_bits").get<int>();
  if (att.algorithm != "RSA-PSS-SHA256" || att.key_bits != 4096) {
    fail(Errc::malformed_response, "unexpected signature scheme " + att.algorithm);
  }

  // Never accept a signature without checking it against the published key.
  const KeyRecord key = fetch_key(endpoint, att.key_id);
  PublicKey pub = PublicKey::from_pem(key.public_key_pem);
  std::string sig;
  try {
    sig = base64_decode(att.signature_base64);
  } catch (const Error&) {
    fail(Errc::signature_invalid, "signature is not valid base64");
  }
  if (!pub.verify_pss_sha256(digest.hex, sig)) {
    fail(Errc::signature_invalid, "service signature does not verify");
  }
  return att;
}

}  // namespace veritas
