#include <vector>
#include <doctest.h>

#include "test_support.hpp"
#include "veritas/digest.hpp"
#include "veritas/errors.hpp"
#include "veritas/keys.hpp"

using namespace veritas;

namespace {

// 4096-bit generation is slow; share one pair across the signing tests.
RsaKeyPair& test_pair() {
  static RsaKeyPair pair = RsaKeyPair::generate(4096);
  return pair;
}

}  // namespace

TEST_CASE("base64 round trip") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  const std::vector<std::string> samples{"", "a", "ab", "abc", "abcd", std::string(257, '\x7f')};
  for (const std::string& s : samples) {
    CHECK(base64_decode(base64_encode(s)) == s);
  }
  CHECK_THROWS_AS(base64_decode("abc"), Error);     // bad length
  CHECK_THROWS_AS(base64_decode("a!!="), Error);    // bad alphabet
}

TEST_CASE("sign/verify round trip over the ASCII hex preimage") {
  auto& pair = test_pair();
  CHECK(pair.bits() == 4096);
  const std::string preimage = sha256_bytes("session bytes").hex;
  REQUIRE(preimage.size() == 64);

  const std::string sig = pair.sign_pss_sha256(preimage);
  CHECK(sig.size() == 512);  // 4096-bit RSA signature

  PublicKey pub = PublicKey::from_pem(pair.public_pem());
  CHECK(pub.verify_pss_sha256(preimage, sig));

  // Any change to message or signature breaks verification.
  std::string other = preimage;
  other[0] = other[0] == 'a' ? 'b' : 'a';
  CHECK_FALSE(pub.verify_pss_sha256(other, sig));
  std::string bad_sig = sig;
  bad_sig[100] ^= 0x01;
  CHECK_FALSE(pub.verify_pss_sha256(preimage, bad_sig));
}

TEST_CASE("PSS is probabilistic: same digest, distinct signatures, both verify") {
  auto& pair = test_pair();
  const std::string preimage = sha256_bytes("same input").hex;
  const std::string s1 = pair.sign_pss_sha256(preimage);
  const std::string s2 = pair.sign_pss_sha256(preimage);
  CHECK(s1 != s2);
  PublicKey pub = PublicKey::from_pem(pair.public_pem());
  CHECK(pub.verify_pss_sha256(preimage, s1));
  CHECK(pub.verify_pss_sha256(preimage, s2));
}

TEST_CASE("encrypted private PEM round trip; wrong passphrase fails") {
  auto& pair = test_pair();
  const std::string pem = pair.private_pem("correct horse");
  CHECK(pem.find("ENCRYPTED PRIVATE KEY") != std::string::npos);
  CHECK(pem.find("BEGIN PRIVATE KEY") == std::string::npos);  // never cleartext

  RsaKeyPair restored = RsaKeyPair::from_private_pem(pem, "correct horse");
  const std::string preimage = sha256_bytes("x").hex;
  PublicKey pub = PublicKey::from_pem(pair.public_pem());
  CHECK(pub.verify_pss_sha256(preimage, restored.sign_pss_sha256(preimage)));

  CHECK_THROWS_AS(RsaKeyPair::from_private_pem(pem, "wrong"), Error);
}

TEST_CASE("interop: openssl CLI verifies our RSA-PSS signature over the hex preimage") {
  auto& pair = test_pair();
  const std::string preimage = sha256_bytes("interop payload").hex;
  const std::string sig = pair.sign_pss_sha256(preimage);

  testutil::TempDir dir("pss");
  testutil::write_file(dir.path() / "pub.pem", pair.public_pem());
  testutil::write_file(dir.path() / "msg.txt", preimage);
  testutil::write_file(dir.path() / "sig.bin", sig);

  int rc = -1;
  const std::string out = testutil::run_and_capture(
      "openssl dgst -sha256 -verify " + (dir.path() / "pub.pem").string() +
          " -sigopt rsa_padding_mode:pss -sigopt rsa_pss_saltlen:digest -signature " +
          (dir.path() / "sig.bin").string() + " " + (dir.path() / "msg.txt").string() +
          " 2>/dev/null",
      &rc);
  if (rc == 127) {
    MESSAGE("openssl CLI unavailable; interop check skipped");
    return;
  }
  CHECK(rc == 0);
  CHECK(out.find("Verified OK") != std::string::npos);
}
