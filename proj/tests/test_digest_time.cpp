#include <doctest.h>

#include "test_support.hpp"
#include "veritas/digest.hpp"
#include "veritas/errors.hpp"
#include "veritas/time.hpp"

using namespace veritas;

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_bytes("").hex == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_bytes("abc").hex ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sha256 streaming equals one-shot and matches sha256sum") {
  Sha256 h;
  h.update("hello ");
  h.update("world");
  const Digest streamed = h.finish();
  CHECK(streamed == sha256_bytes("hello world"));

  testutil::TempDir dir("digest");
  testutil::write_file(dir.path() / "f.bin", "hello world");
  CHECK(sha256_file(dir.path() / "f.bin") == streamed);

  int rc = 0;
  const std::string out = testutil::run_and_capture(
      "sha256sum " + (dir.path() / "f.bin").string() + " 2>/dev/null", &rc);
  REQUIRE(rc == 0);
  CHECK(out.substr(0, 64) == streamed.hex);
}

TEST_CASE("digest rendering round trip and validation") {
  const Digest d = sha256_bytes("x");
  CHECK(d.rendered() == "sha256:" + d.hex);
  CHECK(Digest::from_rendered(d.rendered()) == d);
  CHECK(is_hex_digest(d.hex));
  CHECK_FALSE(is_hex_digest(d.hex.substr(1)));
  CHECK_FALSE(is_hex_digest(std::string(63, 'a') + "G"));
  CHECK_THROWS_AS(Digest::from_rendered("md5:" + d.hex), Error);
  CHECK_THROWS_AS(Digest::from_rendered("sha256:" + d.hex.substr(1)), Error);
}

TEST_CASE("timestamp rendering at both precisions") {
  const Timestamp t = Timestamp::from_ms(1767323045678);  // 2026-01-02T03:04:05.678Z
  CHECK(t.rfc3339_seconds() == "2026-01-02T03:04:05Z");
  CHECK(t.rfc3339_millis() == "2026-01-02T03:04:05.678Z");
  CHECK(Timestamp::parse_seconds("2026-01-02T03:04:05Z").ms == 1767323045000);
  CHECK(Timestamp::parse_millis("2026-01-02T03:04:05.678Z") == t);
}

TEST_CASE("timestamp parsers are strict") {
  CHECK_THROWS_AS(Timestamp::parse_seconds("2026-01-02T03:04:05.678Z"), Error);
  CHECK_THROWS_AS(Timestamp::parse_seconds("2026-01-02 03:04:05Z"), Error);
  CHECK_THROWS_AS(Timestamp::parse_seconds("2026-01-02T03:04:05+00:00"), Error);
  CHECK_THROWS_AS(Timestamp::parse_millis("2026-01-02T03:04:05Z"), Error);
  CHECK_THROWS_AS(Timestamp::parse_millis("2026-13-02T03:04:05.000Z"), Error);
}

TEST_CASE("timestamp round trip across a range of instants") {
  for (std::int64_t ms : {0ll, 951782400123ll, 1767323045678ll, 4102444799999ll}) {
    const Timestamp t = Timestamp::from_ms(ms);
    CHECK(Timestamp::parse_millis(t.rfc3339_millis()).ms == ms);
    CHECK(Timestamp::parse_seconds(t.rfc3339_seconds()).ms == (ms / 1000) * 1000);
  }
}
