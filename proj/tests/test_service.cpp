#include <doctest.h>

#include <json.hpp>

#include <thread>

#include "test_support.hpp"
#include "veritas/attest_client.hpp"
#include "veritas/attest_service.hpp"
#include "veritas/digest.hpp"
#include "veritas/errors.hpp"
#include "veritas/keys.hpp"

using namespace veritas;

TEST_CASE("sign_digest round trip under the active public key") {
  auto& svc = testutil::shared_service();
  const std::string digest = sha256_bytes("fixture session").hex;
  const Attestation att = svc.service->sign_digest(digest, "00112233445566778899aabbccddeeff");

  CHECK(att.algorithm == "RSA-PSS-SHA256");
  CHECK(att.key_bits == 4096);
  CHECK(att.session_digest.hex == digest);
  CHECK(att.service_id == "veritas-test-service");

  auto key = svc.service->get_public_key(att.key_id);
  REQUIRE(key.has_value());
  PublicKey pub = PublicKey::from_pem(key->public_key_pem);
  CHECK(pub.verify_pss_sha256(digest, base64_decode(att.signature_base64)));
}

TEST_CASE("malformed digests are rejected before touching the key") {
  auto& svc = testutil::shared_service();
  const std::string valid = sha256_bytes("x").hex;
  CHECK_THROWS_WITH_AS(svc.service->sign_digest(valid.substr(0, 63)),
                       doctest::Contains("malformed-digest"), Error);
  CHECK_THROWS_AS(svc.service->sign_digest(valid + "0"), Error);
  std::string upper = valid;
  upper[0] = 'A';
  CHECK_THROWS_AS(svc.service->sign_digest(upper), Error);
  CHECK_THROWS_AS(svc.service->sign_digest("zz" + valid.substr(2)), Error);
}

TEST_CASE("same digest signed twice: distinct signatures, both verify") {
  auto& svc = testutil::shared_service();
  const std::string digest = sha256_bytes("twice").hex;
  const Attestation a = svc.service->sign_digest(digest);
  const Attestation b = svc.service->sign_digest(digest);
  CHECK(a.signature_base64 != b.signature_base64);
  auto key = svc.service->get_public_key(a.key_id);
  REQUIRE(key.has_value());
  PublicKey pub = PublicKey::from_pem(key->public_key_pem);
  CHECK(pub.verify_pss_sha256(digest, base64_decode(a.signature_base64)));
  CHECK(pub.verify_pss_sha256(digest, base64_decode(b.signature_base64)));
}

TEST_CASE("unknown key ids resolve to nothing") {
  auto& svc = testutil::shared_service();
  CHECK_FALSE(svc.service->get_public_key("k-doesnotexist").has_value());
}

TEST_CASE("rotation: one active key, retired keys keep verifying") {
  testutil::ServiceFixture svc;  // private fixture: rotation mutates state
  const std::string digest = sha256_bytes("pre-rotation").hex;
  const Attestation before = svc.service->sign_digest(digest);

  const KeyRecord fresh = svc.service->rotate_key();
  CHECK(fresh.key_id != before.key_id);
  CHECK(fresh.status == KeyStatus::active);

  // Exactly one active key.
  const KeyRecord active = svc.service->active_key();
  CHECK(active.key_id == fresh.key_id);
  auto old_rec = svc.service->get_public_key(before.key_id);
  REQUIRE(old_rec.has_value());
  CHECK(old_rec->status == KeyStatus::retired);

  // The old attestation still verifies via the retired key.
  PublicKey old_pub = PublicKey::from_pem(old_rec->public_key_pem);
  CHECK(old_pub.verify_pss_sha256(digest, base64_decode(before.signature_base64)));

  // New signatures come from the new key.
  const Attestation after = svc.service->sign_digest(digest);
  CHECK(after.key_id == fresh.key_id);

  // Two rotations keep the single-active invariant.
  svc.service->rotate_key();
  int active_count = 0;
  for (const auto& endpoint_key :
       {before.key_id, fresh.key_id, svc.service->active_key().key_id}) {
    auto rec = svc.service->get_public_key(endpoint_key);
    if (rec && rec->status == KeyStatus::active) ++active_count;
  }
  CHECK(active_count == 1);
}

TEST_CASE("audit log is a valid hash chain and carries only digests") {
  testutil::ServiceFixture svc;
  const std::string d1 = sha256_bytes("run-one").hex;
  const std::string d2 = sha256_bytes("run-two").hex;
  svc.service->sign_digest(d1, "00112233445566778899aabbccddeeff");
  svc.service->rotate_key();
  svc.service->sign_digest(d2);

  const auto log_path = svc.dir.path() / "keystore" / "audit.log";
  CHECK(KeyStore::audit_chain_valid(log_path));

  // Breaking any line breaks the chain.
  std::string log = testutil::read_file(log_path);
  std::string broken = log;
  broken[broken.find(d1) + 3] = broken[broken.find(d1) + 3] == '0' ? '1' : '0';
  testutil::write_file(svc.dir.path() / "audit-broken.log", broken);
  CHECK_FALSE(KeyStore::audit_chain_valid(svc.dir.path() / "audit-broken.log"));
}

TEST_CASE("keystore reopens from disk with the right passphrase") {
  testutil::TempDir dir("ks");
  std::string key_id;
  {
    KeyStore ks = KeyStore::open_or_create(dir.path() / "keystore", "pass-1", "svc");
    key_id = ks.active_key().key_id;
  }
  {
    KeyStore ks = KeyStore::open_or_create(dir.path() / "keystore", "pass-1", "ignored");
    CHECK(ks.active_key().key_id == key_id);
    CHECK(ks.service_id() == "svc");
    const std::string digest = sha256_bytes("reopen").hex;
    PublicKey pub = PublicKey::from_pem(ks.active_key().public_key_pem);
    CHECK(pub.verify_pss_sha256(digest, ks.sign_with_active(digest)));
  }
  CHECK_THROWS_AS(KeyStore::open_or_create(dir.path() / "keystore", "wrong", "svc"), Error);
}

TEST_CASE("HTTP surface: attest and key endpoints") {
  auto& svc = testutil::shared_service();
  const std::string digest = sha256_bytes("wire").hex;

  const Attestation att = request_attestation(svc.endpoint(), Digest{digest},
                                              "00112233445566778899aabbccddeeff");
  CHECK(att.session_digest.hex == digest);
  CHECK(att.algorithm == "RSA-PSS-SHA256");

  const KeyRecord key = fetch_key(svc.endpoint(), att.key_id);
  CHECK(key.key_id == att.key_id);
  PublicKey pub = PublicKey::from_pem(key.public_key_pem);
  CHECK(pub.verify_pss_sha256(digest, base64_decode(att.signature_base64)));

  CHECK_THROWS_WITH_AS(fetch_key(svc.endpoint(), "k-nope"), doctest::Contains("unknown-key"),
                       Error);
  CHECK_THROWS_WITH_AS(request_attestation(svc.endpoint(), Digest{"123"}, ""),
                       doctest::Contains("malformed-digest"), Error);
  CHECK_THROWS_WITH_AS(request_attestation("http://127.0.0.1:1", Digest{digest}, ""),
                       doctest::Contains("service-unreachable"), Error);
}

TEST_CASE("the wire never carries more than digest and session id") {
  testutil::ServiceFixture svc;
  std::vector<std::string> bodies;
  svc.server->on_request = [&](const std::string& path, const std::string& body) {
    if (path == "/v1/attest") bodies.push_back(body);
  };
  const std::string digest = sha256_bytes("blind").hex;
  request_attestation(svc.endpoint(), Digest{digest}, "00112233445566778899aabbccddeeff");

  REQUIRE(bodies.size() == 1);
  const auto j = nlohmann::json::parse(bodies[0]);
  CHECK(j.size() == 2);
  REQUIRE(j.contains("digest"));
  REQUIRE(j.contains("session_id"));
  CHECK(is_hex_digest(j["digest"].get<std::string>()));
}

TEST_CASE("responses never leak private key material") {
  testutil::ServiceFixture svc;
  int rc = 0;
  const std::string attest_raw = testutil::run_and_capture(
      "curl -s -X POST http://127.0.0.1:" + std::to_string(svc.port) +
          "/v1/attest -d '{\"digest\":\"" + sha256_bytes("leakcheck").hex + "\"}' 2>/dev/null",
      &rc);
  const std::string key_raw = testutil::run_and_capture(
      "curl -s http://127.0.0.1:" + std::to_string(svc.port) + "/v1/keys/" +
          svc.service->active_key().key_id + " 2>/dev/null",
      &rc);
  for (const auto& body : {attest_raw, key_raw}) {
    CHECK(body.find("PRIVATE KEY") == std::string::npos);
    CHECK(body.find("ENCRYPTED") == std::string::npos);
  }
  CHECK(key_raw.find("PUBLIC KEY") != std::string::npos);
}

TEST_CASE("concurrent signing requests all verify") {
  auto& svc = testutil::shared_service();
  constexpr int kThreads = 6;
  constexpr int kPerThread = 5;
  std::vector<std::thread> workers;
  std::vector<int> ok(kThreads, 0);
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < kPerThread; ++i) {
        const std::string digest =
            sha256_bytes("t" + std::to_string(t) + "i" + std::to_string(i)).hex;
        try {
          const Attestation att = request_attestation(svc.endpoint(), Digest{digest}, "");
          if (att.session_digest.hex == digest) ++ok[t];
        } catch (const Error&) {
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  int total = 0;
  for (int v : ok) total += v;
  CHECK(total == kThreads * kPerThread);
}
