#include <httplib.h>

#include <json.hpp>

#include <thread>

#include "veritas/attest_service.hpp"
#include "veritas/errors.hpp"

namespace veritas {

using json = nlohmann::json;

struct AttestHttpServer::Impl {
  AttestService& service;
  httplib::Server server;
  std::thread worker;
  int port = 0;

  explicit Impl(AttestService& s) : service(s) {}
};

AttestHttpServer::AttestHttpServer(AttestService& service)
    : impl_(std::make_unique<Impl>(service)) {
  auto& server = impl_->server;

  server.Post("/v1/attest", [this](const httplib::Request& req, httplib::Response& res) {
    if (on_request) on_request(req.path, req.body);
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      res.status = 400;
      res.set_content(json{{"error", "malformed-digest"}}.dump(), "application/json");
      return;
    }
    const std::string digest = body.value("digest", "");
    const std::string session_id = body.value("session_id", "");
    try {
      Attestation att = impl_->service.sign_digest(digest, session_id);
      json out{{"algorithm", att.algorithm},
               {"key_bits", att.key_bits},
               {"key_id", att.key_id},
               {"service_id", att.service_id},
               {"signature", att.signature_base64},
               {"signed_at", att.signed_at.rfc3339_seconds()}};
      res.set_content(out.dump(), "application/json");
    } catch (const Error& e) {
      if (e.code() == Errc::malformed_digest) {
        res.status = 400;
        res.set_content(json{{"error", "malformed-digest"}}.dump(), "application/json");
      } else {
        res.status = 503;
        res.set_content(json{{"error", errc_name(e.code())}}.dump(), "application/json");
      }
    }
  });

  server.Get(R"(/v1/keys/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    if (on_request) on_request(req.path, req.body);
    const std::string key_id = req.matches[1];
    auto rec = impl_->service.get_public_key(key_id);
    if (!rec) {
      res.status = 404;
      res.set_content(json{{"error", "unknown-key"}}.dump(), "application/json");
      return;
    }
    json out{{"created_at", rec->created_at.rfc3339_seconds()},
             {"key_id", rec->key_id},
             {"public_key", rec->public_key_pem},
             {"status", rec->status == KeyStatus::active ? "active" : "retired"}};
    res.set_content(out.dump(), "application/json");
  });
}

AttestHttpServer::~AttestHttpServer() { stop(); }

int AttestHttpServer::start(const std::string& host, int port) {
  auto& server = impl_->server;
  if (port == 0) {
    impl_->port = server.bind_to_any_port(host);
  } else {
    if (!server.bind_to_port(host, port)) {
      fail(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->port = port;
  }
  if (impl_->port <= 0) fail(Errc::io_error, "cannot bind " + host);
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
  return impl_->port;
}

void AttestHttpServer::stop() {
  if (impl_->worker.joinable()) {
    impl_->server.stop();
    impl_->worker.join();
  }
}

}  // namespace veritas
