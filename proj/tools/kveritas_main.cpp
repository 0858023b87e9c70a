// kveritas: wrap an experiment, seal the observed session into a signed
// bundle, and verify bundles independently.
//
//   kveritas init [--tier minimal|full] [--source-root P]
//   kveritas run -- <command...>
//   kveritas seal --service <url> --output <path>
//   kveritas verify <bundle> [--key-service <url> | --key-file <path>] [--claims <path>]
//   kveritas serve --keystore <path> --listen <addr>

#include <CLI11.hpp>

#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "veritas/attest_service.hpp"
#include "veritas/canonical.hpp"
#include "veritas/environment.hpp"
#include "veritas/errors.hpp"
#include "veritas/observer.hpp"
#include "veritas/sealer.hpp"
#include "veritas/session_store.hpp"
#include "veritas/verifier.hpp"

namespace {

using namespace veritas;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

int cmd_init(const std::string& tier_name, const std::string& source_root) {
  ToolConfig config;
  config.observer.tier = tier_from_string(tier_name);
  config.observer.source_root = source_root;
  config.observer.validate();

  SessionRecord session = SessionRecord::create(
      SessionRecord::new_session_id(), Timestamp::now(), config.observer.tier,
      capture_environment(config.observer.tier, {}, {}));
  SessionStore store = SessionStore::init(".", config, session);
  std::cerr << "initialized session " << session.session_id() << " ("
            << to_string(config.observer.tier) << " tier) in " << store.dir().string() << "\n";
  return 0;
}

int cmd_run(const std::vector<std::string>& child_argv) {
  SessionStore store = SessionStore::open(".");
  SessionLock lock(store.dir());
  ToolConfig config = store.load_config();
  SessionRecord session = store.load_session();
  if (session.sealed()) fail(Errc::session_sealed, "this session is sealed; start a new directory");
  session.update_declarations(config.frameworks, config.seeds);

  const auto run_index = static_cast<std::uint32_t>(session.run_count());
  RunIo io;
  io.stdout_path = store.transcript_path(run_index, StreamKind::stdout_stream);
  io.stderr_path = store.transcript_path(run_index, StreamKind::stderr_stream);
  io.forward_stdout_fd = STDOUT_FILENO;
  io.forward_stderr_fd = STDERR_FILENO;

  auto gpu = make_platform_gpu_reader();
  RunRecord run;
  {
    auto marker = store.begin_run();
    run = run_command(session, config.observer, child_argv, io, gpu.get());
    store.capture_sources(config.observer.source_root, run.sources_after);
    store.save_session(session);
  }

  // The one-line summary goes to stderr only on interactive terminals so
  // piped output stays byte-identical to a bare execution.
  if (isatty(STDERR_FILENO) || env_or("VERITAS_SUMMARY", "") == "1") {
    std::fprintf(stderr, "[kveritas] run %u: %.3f s, exit %d, %zu metric%s\n", run.run_index,
                 static_cast<double>(run.wall_ms()) / 1000.0, run.exit_code, run.metrics.size(),
                 run.metrics.size() == 1 ? "" : "s");
  }
  return run.exit_code;
}

int cmd_seal(const std::string& service_flag, const std::string& output) {
  SessionStore store = SessionStore::open(".");
  SessionLock lock(store.dir());
  ToolConfig config = store.load_config();
  SessionRecord session = store.load_session();
  session.update_declarations(config.frameworks, config.seeds);

  std::string endpoint = service_flag;
  if (endpoint.empty()) endpoint = env_or("VERITAS_SERVICE", "");
  if (endpoint.empty()) endpoint = config.service_endpoint;
  if (endpoint.empty()) {
    fail(Errc::bad_config, "no attestation service given (--service, VERITAS_SERVICE, or config)");
  }

  SealResult result = seal(std::move(session), store.seal_inputs(), endpoint, output);
  store.save_session(result.sealed_session);

  std::cout << "sealed session " << result.sealed_session.session_id() << "\n"
            << "  digest:  " << result.digest.rendered() << "\n"
            << "  key id:  " << result.attestation.key_id << "\n"
            << "  service: " << result.attestation.service_id << "\n"
            << "  bundle:  " << result.bundle_path.string() << "\n";
  return 0;
}

int cmd_verify(const std::string& bundle, const std::string& key_service,
               const std::string& key_file, const std::string& claims_path) {
  std::unique_ptr<KeySource> keys;
  if (!key_service.empty()) {
    keys = std::make_unique<ServiceKeySource>(key_service);
  } else if (!key_file.empty()) {
    keys = std::make_unique<FileKeySource>(key_file);
  } else {
    std::cerr << "verify: one of --key-service or --key-file is required\n";
    return 2;
  }

  std::vector<Claim> claims;
  if (!claims_path.empty()) {
    try {
      claims = parse_claims_file(claims_path);
    } catch (const Error& e) {
      std::cerr << "verify: " << e.what() << "\n";
      return 2;  // could not verify; says nothing about the bundle
    }
  }

  Verdict verdict;
  if (!claims_path.empty()) {
    verdict = verify_claims(bundle, *keys, claims);
  } else {
    verdict = verify_bundle(bundle, *keys);
  }
  std::cout << verdict.status() << "\n";
  for (const auto& f : verdict.failures) {
    std::cout << "  " << failure_code_name(f.code) << ": " << f.detail << "\n";
  }
  return verdict.pass() ? 0 : 1;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const std::string& keystore_path, const std::string& listen,
              const std::string& service_id) {
  const std::string passphrase = env_or("VERITAS_KEYSTORE_PASSPHRASE", "");
  if (passphrase.empty()) {
    fail(Errc::keystore_io_failure, "set VERITAS_KEYSTORE_PASSPHRASE to unlock the keystore");
  }

  std::string host = "127.0.0.1";
  int port = 0;
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    fail(Errc::bad_config, "--listen expects host:port");
  }
  if (colon > 0) host = listen.substr(0, colon);
  port = std::atoi(listen.substr(colon + 1).c_str());

  AttestService service(KeyStore::open_or_create(keystore_path, passphrase, service_id));
  AttestHttpServer server(service);
  const int bound = server.start(host, port);
  std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
  std::cerr << "service id: " << service.service_id() << ", active key: "
            << service.active_key().key_id << "\n";

  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) {
    usleep(100 * 1000);
  }
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // `run` passes everything after a mandatory "--" to the child untouched.
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args[0] == "run") {
    std::vector<std::string> child;
    bool seen_sep = false;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (!seen_sep && args[i] == "--") {
        seen_sep = true;
        continue;
      }
      if (seen_sep) {
        child.push_back(args[i]);
      } else {
        std::cerr << "run: unexpected argument '" << args[i] << "' (usage: kveritas run -- <command...>)\n";
        return 64;
      }
    }
    if (!seen_sep || child.empty()) {
      std::cerr << "usage: kveritas run -- <command...>\n";
      return 64;
    }
    try {
      return cmd_run(child);
    } catch (const veritas::Error& e) {
      std::cerr << "kveritas run: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{"tamper-evident experiment attestation"};
  app.require_subcommand(1);

  auto* init = app.add_subcommand("init", "create a new session in this directory");
  std::string tier = "full";
  std::string source_root = ".";
  init->add_option("--tier", tier, "fingerprint tier: minimal or full")
      ->check(CLI::IsMember({"minimal", "full"}));
  init->add_option("--source-root", source_root, "root of the observed source tree");

  app.add_subcommand("run", "run a command under observation: kveritas run -- <command...>");

  auto* seal_cmd = app.add_subcommand("seal", "close the session and emit the signed bundle");
  std::string service;
  std::string output = "veritas-bundle.zip";
  seal_cmd->add_option("--service", service, "attestation service url (or VERITAS_SERVICE)");
  seal_cmd->add_option("--output", output, "bundle output path");

  auto* verify_cmd = app.add_subcommand("verify", "verify a sealed bundle");
  std::string bundle, key_service, key_file, claims;
  verify_cmd->add_option("bundle", bundle, "bundle path")->required();
  verify_cmd->add_option("--key-service", key_service, "fetch keys from this service url");
  verify_cmd->add_option("--key-file", key_file, "load keys from a saved key JSON file");
  verify_cmd->add_option("--claims", claims, "claims manifest to check against attested metrics");

  auto* serve_cmd = app.add_subcommand("serve", "run the attestation service");
  std::string keystore = "keystore";
  std::string listen = "127.0.0.1:0";
  std::string service_id;
  serve_cmd->add_option("--keystore", keystore, "keystore directory");
  serve_cmd->add_option("--listen", listen, "host:port (port 0 picks a free port)");
  serve_cmd->add_option("--service-id", service_id, "service identifier for new keystores");

  CLI11_PARSE(app, argc, argv);

  try {
    if (init->parsed()) return cmd_init(tier, source_root);
    if (seal_cmd->parsed()) return cmd_seal(service, output);
    if (verify_cmd->parsed()) return cmd_verify(bundle, key_service, key_file, claims);
    if (serve_cmd->parsed()) return cmd_serve(keystore, listen, service_id);
  } catch (const veritas::Error& e) {
    std::cerr << "kveritas: " << e.what() << "\n";
    if (e.code() == veritas::Errc::unreadable_bundle || e.code() == veritas::Errc::key_unavailable) {
      return 2;
    }
    return 1;
  }
  return 0;
}
