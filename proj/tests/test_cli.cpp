// Drives the installed binary through the documented command behaviors:
// error paths, tier handling, exit-code passthrough, and locking.

#include <doctest.h>

#include <json.hpp>

#include "test_support.hpp"
#include "veritas/canonical.hpp"

using namespace veritas;
using testutil::TempDir;

namespace {

const std::string kBin = KVERITAS_BIN;

std::string in_dir(const std::filesystem::path& dir, const std::string& cmd, int* rc) {
  return testutil::run_and_capture("cd '" + dir.string() + "' && " + cmd + " 2>&1", rc);
}

}  // namespace

TEST_CASE("init creates an open session; a second init is refused") {
  TempDir dir("cli-init");
  int rc = 0;
  const std::string out = in_dir(dir.path(), kBin + " init", &rc);
  CHECK(rc == 0);
  CHECK(out.find("initialized session") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path() / ".veritas" / "session.json"));
  CHECK(std::filesystem::exists(dir.path() / ".veritas" / "config"));

  const std::string state = testutil::read_file(dir.path() / ".veritas" / "session.json");
  const SessionRecord session = session_from_text(state);
  CHECK_FALSE(session.sealed());
  CHECK(session.run_count() == 0);

  const std::string again = in_dir(dir.path(), kBin + " init", &rc);
  CHECK(rc != 0);
  CHECK(again.find("already-initialized") != std::string::npos);
}

TEST_CASE("init rejects a missing source root up front") {
  TempDir dir("cli-badroot");
  int rc = 0;
  const std::string out = in_dir(dir.path(), kBin + " init --source-root ./no/such/tree", &rc);
  CHECK(rc != 0);
  CHECK(out.find("bad-path") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.path() / ".veritas"));
}

TEST_CASE("init --tier minimal keeps the fingerprint to declared fields only") {
  TempDir dir("cli-min");
  int rc = 0;
  in_dir(dir.path(), kBin + " init --tier minimal", &rc);
  REQUIRE(rc == 0);
  const auto state = nlohmann::json::parse(
      testutil::read_file(dir.path() / ".veritas" / "session.json"));
  const auto& env = state.at("environment");
  CHECK(env.size() == 3);
  CHECK(env.contains("framework_versions"));
  CHECK(env.contains("random_seeds"));
  CHECK(env.at("tier") == "minimal");
  CHECK_FALSE(env.contains("cpu_model"));
  CHECK_FALSE(env.contains("gpu_model"));
  CHECK_FALSE(env.contains("os_name_version"));
  CHECK_FALSE(env.contains("total_ram_bytes"));
}

TEST_CASE("run requires init, the separator, and an open session") {
  TempDir dir("cli-run");
  int rc = 0;
  const std::string no_init = in_dir(dir.path(), kBin + " run -- echo hi", &rc);
  CHECK(rc != 0);
  CHECK(no_init.find("not-initialized") != std::string::npos);

  in_dir(dir.path(), kBin + " init", &rc);
  REQUIRE(rc == 0);
  const std::string no_sep = in_dir(dir.path(), kBin + " run echo hi", &rc);
  CHECK(rc == 64);

  in_dir(dir.path(), kBin + " run -- /bin/sh -c 'exit 0'", &rc);
  CHECK(rc == 0);
}

TEST_CASE("run propagates the child exit code and updates declarations from config") {
  TempDir dir("cli-exit");
  int rc = 0;
  in_dir(dir.path(), kBin + " init --tier minimal", &rc);
  REQUIRE(rc == 0);

  // Declarations added to the config after init surface in the session.
  std::string config = testutil::read_file(dir.path() / ".veritas" / "config");
  config += "framework.torch = 2.4.0\nseed.data = 7\n";
  testutil::write_file(dir.path() / ".veritas" / "config", config);

  in_dir(dir.path(), kBin + " run -- /bin/sh -c 'exit 41'", &rc);
  CHECK(rc == 41);

  const auto state = nlohmann::json::parse(
      testutil::read_file(dir.path() / ".veritas" / "session.json"));
  CHECK(state.at("run_count") == 1);
  CHECK(state.at("runs")[0].at("exit_code") == 41);
  const auto& env = state.at("environment");
  CHECK(env.at("framework_versions")[0][0] == "torch");
  CHECK(env.at("random_seeds")[0][0] == "data");
}

TEST_CASE("seal without a reachable service leaves the session open and retryable") {
  TempDir dir("cli-seal");
  int rc = 0;
  in_dir(dir.path(), kBin + " init", &rc);
  REQUIRE(rc == 0);
  in_dir(dir.path(), kBin + " run -- /bin/sh -c \"echo 'm=1'\"", &rc);
  REQUIRE(rc == 0);

  const std::string out =
      in_dir(dir.path(), kBin + " seal --service http://127.0.0.1:1 --output b.zip", &rc);
  CHECK(rc != 0);
  CHECK(out.find("service-unreachable") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "b.zip"));
  const SessionRecord session =
      session_from_text(testutil::read_file(dir.path() / ".veritas" / "session.json"));
  CHECK_FALSE(session.sealed());

  const std::string no_service = in_dir(dir.path(), kBin + " seal --output b.zip", &rc);
  CHECK(rc != 0);
  CHECK(no_service.find("no attestation service") != std::string::npos);

  // Retry against a live service succeeds end to end.
  auto& svc = testutil::shared_service();
  in_dir(dir.path(), kBin + " seal --service " + svc.endpoint() + " --output b.zip", &rc);
  CHECK(rc == 0);
  const std::string verify_out =
      in_dir(dir.path(), kBin + " verify b.zip --key-service " + svc.endpoint(), &rc);
  CHECK(rc == 0);
  CHECK(verify_out == "PASS\n");

  // Sealed sessions refuse further runs and further seals.
  const std::string run_after = in_dir(dir.path(), kBin + " run -- echo hi", &rc);
  CHECK(rc != 0);
  CHECK(run_after.find("session-sealed") != std::string::npos);
  const std::string seal_after =
      in_dir(dir.path(), kBin + " seal --service " + svc.endpoint() + " --output b2.zip", &rc);
  CHECK(rc != 0);
  CHECK(seal_after.find("session-sealed") != std::string::npos);
}

TEST_CASE("verify exit codes: 0 PASS, 1 FAIL, 2 could-not-verify") {
  auto& svc = testutil::shared_service();
  TempDir dir("cli-verify");
  int rc = 0;
  in_dir(dir.path(), kBin + " init", &rc);
  in_dir(dir.path(), kBin + " run -- /bin/sh -c \"echo 'val_accuracy: 0.913'\"", &rc);
  in_dir(dir.path(), kBin + " seal --service " + svc.endpoint() + " --output b.zip", &rc);
  REQUIRE(rc == 0);

  in_dir(dir.path(), kBin + " verify b.zip --key-service " + svc.endpoint(), &rc);
  CHECK(rc == 0);

  // Claims mismatch: exit 1 with the failure code printed.
  testutil::write_file(dir.path() / "claims.tsv", "val_accuracy\t0.999\texact\n");
  const std::string out = in_dir(
      dir.path(),
      kBin + " verify b.zip --key-service " + svc.endpoint() + " --claims claims.tsv", &rc);
  CHECK(rc == 1);
  CHECK(out.find("FAIL") != std::string::npos);
  CHECK(out.find("claim-mismatch") != std::string::npos);

  // Honest claims pass.
  testutil::write_file(dir.path() / "honest.tsv", "val_accuracy\t0.913\texact\n");
  in_dir(dir.path(),
         kBin + " verify b.zip --key-service " + svc.endpoint() + " --claims honest.tsv", &rc);
  CHECK(rc == 0);

  // Unreachable key service: could-not-verify, not FAIL.
  const std::string unavailable =
      in_dir(dir.path(), kBin + " verify b.zip --key-service http://127.0.0.1:1", &rc);
  CHECK(rc == 2);
  CHECK(unavailable.find("key-unavailable") != std::string::npos);

  // Unreadable bundle: also could-not-verify.
  testutil::write_file(dir.path() / "junk.zip", "not an archive");
  in_dir(dir.path(), kBin + " verify junk.zip --key-service " + svc.endpoint(), &rc);
  CHECK(rc == 2);

  // No key source given.
  in_dir(dir.path(), kBin + " verify b.zip", &rc);
  CHECK(rc == 2);

  // Missing claims manifest: could-not-verify, not a verdict on the bundle.
  in_dir(dir.path(),
         kBin + " verify b.zip --key-service " + svc.endpoint() + " --claims absent.tsv", &rc);
  CHECK(rc == 2);
}

TEST_CASE("concurrent invocations fail fast on the session lock") {
  TempDir dir("cli-lock");
  int rc = 0;
  in_dir(dir.path(), kBin + " init", &rc);
  REQUIRE(rc == 0);

  // A long run holds the lock; a second command must not block.
  const std::string cmd = "cd '" + dir.path().string() + "' && " + kBin +
                          " run -- sleep 4 > /dev/null 2>&1 & echo $!";
  const std::string pid_text = testutil::run_and_capture(cmd, &rc);
  usleep(800 * 1000);  // let the run start and take the lock

  const std::string out = in_dir(dir.path(), kBin + " run -- echo contender", &rc);
  CHECK(rc != 0);
  CHECK(out.find("session-locked") != std::string::npos);

  testutil::run_and_capture("wait " + pid_text + " 2>/dev/null", &rc);
  usleep(4200 * 1000);  // let the background run finish cleanly
}

TEST_CASE("a live run-in-progress marker blocks sealing; a stale one is cleared") {
  TempDir dir("cli-marker");
  int rc = 0;
  in_dir(dir.path(), kBin + " init", &rc);
  in_dir(dir.path(), kBin + " run -- /bin/sh -c \"echo 'm=1'\"", &rc);
  REQUIRE(rc == 0);

  // Marker naming a live pid (ours): the session counts as mid-run.
  testutil::write_file(dir.path() / ".veritas" / "run-in-progress",
                       std::to_string(getpid()) + "\n");
  const std::string busy = in_dir(dir.path(), kBin + " run -- echo hi", &rc);
  CHECK(rc != 0);
  CHECK(busy.find("session-still-open") != std::string::npos);

  // Marker naming a dead pid: stale leftovers from a crash are cleared.
  testutil::write_file(dir.path() / ".veritas" / "run-in-progress", "999999999\n");
  in_dir(dir.path(), kBin + " run -- echo hi", &rc);
  CHECK(rc == 0);
  CHECK_FALSE(std::filesystem::exists(dir.path() / ".veritas" / "run-in-progress"));
}

TEST_CASE("editing session state by hand is detected") {
  TempDir dir("cli-tamper");
  int rc = 0;
  in_dir(dir.path(), kBin + " init", &rc);
  in_dir(dir.path(), kBin + " run -- /bin/sh -c \"echo 'acc: 0.5'\"", &rc);
  REQUIRE(rc == 0);

  std::string state = testutil::read_file(dir.path() / ".veritas" / "session.json");
  const auto pos = state.find("0.5");
  REQUIRE(pos != std::string::npos);
  state.replace(pos, 3, "0.9");
  testutil::write_file(dir.path() / ".veritas" / "session.json", state);

  const std::string out = in_dir(dir.path(), kBin + " run -- echo hi", &rc);
  CHECK(rc != 0);
  CHECK(out.find("state-tampered") != std::string::npos);
}
