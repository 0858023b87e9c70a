#include "veritas/canonical.hpp"

#include <json.hpp>

#include <cstdlib>

#include "veritas/errors.hpp"

namespace veritas {

// nlohmann::json with the default std::map object type keeps keys in
// byte-lexicographic order, so dump() emits the canonical key order.
using json = nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

[[noreturn]] void bad(const std::string& what) {
  fail(Errc::bad_config, "canonical form: " + what);
}

// Compact dump with invalid UTF-8 replaced by U+FFFD: argv and file paths
// are raw bytes on this platform and must never make sealing throw. The
// replacement is deterministic, so canonical bytes stay stable.
std::string canonical_dump(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

// ---- encoding ------------------------------------------------------------

json encode_snapshot(const SourceSnapshot& s) {
  json files = json::array();
  for (const auto& f : s.files) {
    json e;
    e["path"] = f.path;
    if (f.is_error()) {
      e["error"] = f.error;
    } else {
      e["digest"] = f.digest.rendered();
      e["size_bytes"] = f.size_bytes;
      if (f.is_symlink()) e["link_target"] = f.link_target;
    }
    files.push_back(std::move(e));
  }
  return json{{"files", std::move(files)},
              {"root", s.root},
              {"total_bytes", s.total_bytes},
              {"total_files", s.total_files}};
}

json encode_trace(const TelemetryTrace& t) {
  json samples = json::array();
  for (const auto& s : t.samples) {
    json e;
    e["at"] = s.at.rfc3339_millis();
    e["cpu_time_seconds"] = s.cpu_time_seconds_lexical();
    e["disk_read_bytes"] = s.disk_read_bytes;
    e["disk_write_bytes"] = s.disk_write_bytes;
    if (s.gpu_mem_bytes) e["gpu_mem_bytes"] = *s.gpu_mem_bytes;
    if (s.gpu_util_pct) e["gpu_util_pct"] = *s.gpu_util_pct;
    e["rss_bytes"] = s.rss_bytes;
    samples.push_back(std::move(e));
  }
  return json{{"interval_seconds", t.interval_seconds}, {"samples", std::move(samples)}};
}

json encode_run(const RunRecord& r) {
  json metrics = json::array();
  for (const auto& m : r.metrics) {
    metrics.push_back(json{{"byte_offset", m.byte_offset},
                           {"lexical_value", m.lexical_value},
                           {"name", m.name},
                           {"observed_at", m.observed_at.rfc3339_millis()},
                           {"stream", to_string(m.stream)}});
  }
  return json{{"command", r.command},
              {"ended_at", r.ended_at.rfc3339_millis()},
              {"exit_code", r.exit_code},
              {"metrics", std::move(metrics)},
              {"run_index", r.run_index},
              {"sources_after", encode_snapshot(r.sources_after)},
              {"sources_before", encode_snapshot(r.sources_before)},
              {"started_at", r.started_at.rfc3339_millis()},
              {"stderr_bytes", r.stderr_bytes},
              {"stderr_digest", r.stderr_digest.rendered()},
              {"stdout_bytes", r.stdout_bytes},
              {"stdout_digest", r.stdout_digest.rendered()},
              {"telemetry", encode_trace(r.telemetry)}};
}

json encode_environment(const EnvironmentFingerprint& e) {
  json frameworks = json::array();
  for (const auto& [name, version] : e.framework_versions) {
    frameworks.push_back(json::array({name, version}));
  }
  json seeds = json::array();
  for (const auto& [name, value] : e.random_seeds) {
    seeds.push_back(json::array({name, value}));
  }
  json out{{"framework_versions", std::move(frameworks)},
           {"random_seeds", std::move(seeds)},
           {"tier", to_string(e.tier)}};
  if (e.tier == Tier::full) {
    out["cpu_cores"] = e.cpu_cores;
    out["cpu_model"] = e.cpu_model;
    out["gpu_model"] = e.gpu_model;
    out["os_name_version"] = e.os_name_version;
    out["total_ram_bytes"] = e.total_ram_bytes;
  }
  return out;
}

json encode_hmc(const HmcReport& h) {
  json flags = json::array();
  for (const auto& f : h.flags) {
    flags.push_back(json{{"code", to_string(f.code)},
                         {"detail", f.detail},
                         {"run_index", f.run_index}});
  }
  return json{{"flags", std::move(flags)},
              {"score", h.score_string()},
              {"verdict", h.verdict()}};
}

json encode_session(const SessionRecord& s) {
  json runs = json::array();
  for (const auto& r : s.runs()) runs.push_back(encode_run(r));
  json out{{"created_at", s.created_at().rfc3339_seconds()},
           {"environment", encode_environment(s.environment())},
           {"format_version", kFormatVersion},
           {"run_count", s.run_count()},
           {"runs", std::move(runs)},
           {"session_id", s.session_id()},
           {"state", to_string(s.state())},
           {"tier", to_string(s.tier())}};
  if (s.hmc()) out["hmc"] = encode_hmc(*s.hmc());
  return out;
}

// ---- strict decoding -----------------------------------------------------

void expect_keys(const json& obj, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional, const char* what) {
  if (!obj.is_object()) bad(std::string(what) + " is not an object");
  for (const char* k : required) {
    if (!obj.contains(k)) bad(std::string(what) + " missing key '" + k + "'");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : required) known = known || it.key() == k;
    for (const char* k : optional) known = known || it.key() == k;
    if (!known) bad(std::string(what) + " has unknown key '" + it.key() + "'");
  }
}

std::string get_string(const json& obj, const char* key, const char* what) {
  const auto& v = obj.at(key);
  if (!v.is_string()) bad(std::string(what) + "." + key + " is not a string");
  return v.get<std::string>();
}

std::uint64_t get_uint(const json& obj, const char* key, const char* what) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) bad(std::string(what) + "." + key + " is not an unsigned integer");
  return v.get<std::uint64_t>();
}

std::int64_t get_int(const json& obj, const char* key, const char* what) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) bad(std::string(what) + "." + key + " is not an integer");
  return v.get<std::int64_t>();
}

Digest get_digest(const json& obj, const char* key, const char* what) {
  return Digest::from_rendered(get_string(obj, key, what));
}

double parse_lexical_number(const std::string& s, const char* what) {
  if (s.empty()) bad(std::string(what) + ": empty numeric token");
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == nullptr || *end != '\0') bad(std::string(what) + ": not a decimal token: " + s);
  return v;
}

SourceSnapshot decode_snapshot(const json& j, const char* what) {
  expect_keys(j, {"files", "root", "total_bytes", "total_files"}, {}, what);
  SourceSnapshot s;
  s.root = get_string(j, "root", what);
  s.total_bytes = get_uint(j, "total_bytes", what);
  s.total_files = get_uint(j, "total_files", what);
  if (!j.at("files").is_array()) bad(std::string(what) + ".files is not an array");
  for (const auto& e : j.at("files")) {
    FileDigest f;
    if (e.contains("error")) {
      expect_keys(e, {"error", "path"}, {}, "snapshot error entry");
      f.path = get_string(e, "path", what);
      f.error = get_string(e, "error", what);
    } else {
      expect_keys(e, {"digest", "path", "size_bytes"}, {"link_target"}, "snapshot entry");
      f.path = get_string(e, "path", what);
      f.digest = get_digest(e, "digest", what);
      f.size_bytes = get_uint(e, "size_bytes", what);
      if (e.contains("link_target")) f.link_target = get_string(e, "link_target", what);
    }
    s.files.push_back(std::move(f));
  }
  return s;
}

TelemetryTrace decode_trace(const json& j) {
  expect_keys(j, {"interval_seconds", "samples"}, {}, "telemetry");
  TelemetryTrace t;
  t.interval_seconds = get_string(j, "interval_seconds", "telemetry");
  parse_lexical_number(t.interval_seconds, "telemetry.interval_seconds");
  if (!j.at("samples").is_array()) bad("telemetry.samples is not an array");
  for (const auto& e : j.at("samples")) {
    expect_keys(e,
                {"at", "cpu_time_seconds", "disk_read_bytes", "disk_write_bytes", "rss_bytes"},
                {"gpu_mem_bytes", "gpu_util_pct"}, "telemetry sample");
    TelemetrySample s;
    s.at = Timestamp::parse_millis(get_string(e, "at", "sample"));
    const std::string cpu = get_string(e, "cpu_time_seconds", "sample");
    // Fixed "s.mmm" rendering; recover integer milliseconds exactly.
    auto dot = cpu.find('.');
    if (dot == std::string::npos || cpu.size() != dot + 4) bad("sample cpu_time_seconds malformed: " + cpu);
    for (std::size_t i = 0; i < cpu.size(); ++i) {
      if (i == dot) continue;
      if (cpu[i] < '0' || cpu[i] > '9') bad("sample cpu_time_seconds malformed: " + cpu);
    }
    s.cpu_time_ms = std::strtoll(cpu.substr(0, dot).c_str(), nullptr, 10) * 1000 +
                    std::strtoll(cpu.substr(dot + 1).c_str(), nullptr, 10);
    s.disk_read_bytes = get_uint(e, "disk_read_bytes", "sample");
    s.disk_write_bytes = get_uint(e, "disk_write_bytes", "sample");
    s.rss_bytes = get_uint(e, "rss_bytes", "sample");
    if (e.contains("gpu_util_pct")) s.gpu_util_pct = static_cast<int>(get_int(e, "gpu_util_pct", "sample"));
    if (e.contains("gpu_mem_bytes")) s.gpu_mem_bytes = get_uint(e, "gpu_mem_bytes", "sample");
    t.samples.push_back(std::move(s));
  }
  return t;
}

RunRecord decode_run(const json& j) {
  expect_keys(j,
              {"command", "ended_at", "exit_code", "metrics", "run_index", "sources_after",
               "sources_before", "started_at", "stderr_bytes", "stderr_digest", "stdout_bytes",
               "stdout_digest", "telemetry"},
              {}, "run");
  RunRecord r;
  r.run_index = static_cast<std::uint32_t>(get_uint(j, "run_index", "run"));
  if (!j.at("command").is_array()) bad("run.command is not an array");
  for (const auto& a : j.at("command")) {
    if (!a.is_string()) bad("run.command element is not a string");
    r.command.push_back(a.get<std::string>());
  }
  r.started_at = Timestamp::parse_millis(get_string(j, "started_at", "run"));
  r.ended_at = Timestamp::parse_millis(get_string(j, "ended_at", "run"));
  r.exit_code = static_cast<int>(get_int(j, "exit_code", "run"));
  r.stdout_digest = get_digest(j, "stdout_digest", "run");
  r.stderr_digest = get_digest(j, "stderr_digest", "run");
  r.stdout_bytes = get_uint(j, "stdout_bytes", "run");
  r.stderr_bytes = get_uint(j, "stderr_bytes", "run");
  if (!j.at("metrics").is_array()) bad("run.metrics is not an array");
  for (const auto& e : j.at("metrics")) {
    expect_keys(e, {"byte_offset", "lexical_value", "name", "observed_at", "stream"}, {}, "metric");
    MetricRecord m;
    m.name = get_string(e, "name", "metric");
    m.lexical_value = get_string(e, "lexical_value", "metric");
    m.numeric_value = parse_lexical_number(m.lexical_value, "metric.lexical_value");
    m.stream = stream_kind_from_string(get_string(e, "stream", "metric"));
    m.byte_offset = get_uint(e, "byte_offset", "metric");
    m.observed_at = Timestamp::parse_millis(get_string(e, "observed_at", "metric"));
    r.metrics.push_back(std::move(m));
  }
  r.sources_before = decode_snapshot(j.at("sources_before"), "sources_before");
  r.sources_after = decode_snapshot(j.at("sources_after"), "sources_after");
  r.telemetry = decode_trace(j.at("telemetry"));
  return r;
}

EnvironmentFingerprint decode_environment(const json& j) {
  EnvironmentFingerprint e;
  if (!j.is_object() || !j.contains("tier")) bad("environment missing tier");
  e.tier = tier_from_string(get_string(j, "tier", "environment"));
  if (e.tier == Tier::minimal) {
    expect_keys(j, {"framework_versions", "random_seeds", "tier"}, {}, "environment");
  } else {
    expect_keys(j,
                {"cpu_cores", "cpu_model", "framework_versions", "gpu_model", "os_name_version",
                 "random_seeds", "tier", "total_ram_bytes"},
                {}, "environment");
    e.cpu_cores = static_cast<std::uint32_t>(get_uint(j, "cpu_cores", "environment"));
    e.cpu_model = get_string(j, "cpu_model", "environment");
    e.gpu_model = get_string(j, "gpu_model", "environment");
    e.os_name_version = get_string(j, "os_name_version", "environment");
    e.total_ram_bytes = get_uint(j, "total_ram_bytes", "environment");
  }
  for (const auto& p : j.at("framework_versions")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
      bad("framework_versions entry is not a [name, version] pair");
    }
    e.framework_versions.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  for (const auto& p : j.at("random_seeds")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_number_integer()) {
      bad("random_seeds entry is not a [name, integer] pair");
    }
    e.random_seeds.emplace_back(p[0].get<std::string>(), p[1].get<std::int64_t>());
  }
  return e;
}

HmcReport decode_hmc(const json& j) {
  expect_keys(j, {"flags", "score", "verdict"}, {}, "hmc");
  HmcReport h;
  const std::string score = get_string(j, "score", "hmc");
  if (score.size() != 4 || score[1] != '.' || score[0] < '0' || score[0] > '9' ||
      score[2] < '0' || score[2] > '9' || score[3] < '0' || score[3] > '9') {
    bad("hmc.score malformed: " + score);
  }
  h.score_centi = (score[0] - '0') * 100 + (score[2] - '0') * 10 + (score[3] - '0');
  const std::string verdict = get_string(j, "verdict", "hmc");
  if (verdict != h.verdict()) bad("hmc.verdict inconsistent with score");
  if (!j.at("flags").is_array()) bad("hmc.flags is not an array");
  for (const auto& e : j.at("flags")) {
    expect_keys(e, {"code", "detail", "run_index"}, {}, "hmc flag");
    HmcFlag f;
    f.code = hmc_flag_code_from_string(get_string(e, "code", "flag"));
    f.detail = get_string(e, "detail", "flag");
    f.run_index = static_cast<std::uint32_t>(get_uint(e, "run_index", "flag"));
    h.flags.push_back(std::move(f));
  }
  return h;
}

}  // namespace

std::string session_to_text(const SessionRecord& session) {
  return canonical_dump(encode_session(session));
}

std::string canonicalize(const SessionRecord& session) {
  if (!session.sealed()) {
    fail(Errc::session_still_open, "cannot canonicalize an open session");
  }
  return session_to_text(session);
}

Digest session_digest(const SessionRecord& session) {
  return sha256_bytes(canonicalize(session));
}

SessionRecord session_from_text(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  expect_keys(j,
              {"created_at", "environment", "format_version", "run_count", "runs", "session_id",
               "state", "tier"},
              {"hmc"}, "session");
  if (get_int(j, "format_version", "session") != kFormatVersion) {
    bad("unsupported format_version");
  }
  std::vector<RunRecord> runs;
  if (!j.at("runs").is_array()) bad("session.runs is not an array");
  for (const auto& r : j.at("runs")) runs.push_back(decode_run(r));
  if (get_uint(j, "run_count", "session") != runs.size()) {
    bad("run_count does not equal length of runs");
  }
  std::optional<HmcReport> hmc;
  if (j.contains("hmc")) hmc = decode_hmc(j.at("hmc"));
  return SessionRecord::restore(
      get_string(j, "session_id", "session"),
      Timestamp::parse_seconds(get_string(j, "created_at", "session")),
      tier_from_string(get_string(j, "tier", "session")), decode_environment(j.at("environment")),
      std::move(runs), std::move(hmc),
      session_state_from_string(get_string(j, "state", "session")));
}

Digest snapshot_digest(const SourceSnapshot& snapshot) {
  return sha256_bytes(canonical_dump(encode_snapshot(snapshot)));
}

std::string attestation_to_text(const Attestation& att) {
  json j{{"algorithm", att.algorithm},
         {"key_bits", att.key_bits},
         {"key_id", att.key_id},
         {"service_id", att.service_id},
         {"session_digest", att.session_digest.rendered()},
         {"signature", att.signature_base64},
         {"signed_at", att.signed_at.rfc3339_seconds()}};
  return canonical_dump(j);
}

Attestation attestation_from_text(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    bad(std::string("attestation is not valid JSON: ") + e.what());
  }
  expect_keys(j,
              {"algorithm", "key_bits", "key_id", "service_id", "session_digest", "signature",
               "signed_at"},
              {}, "attestation");
  Attestation a;
  a.algorithm = get_string(j, "algorithm", "attestation");
  a.key_bits = static_cast<int>(get_int(j, "key_bits", "attestation"));
  a.key_id = get_string(j, "key_id", "attestation");
  a.service_id = get_string(j, "service_id", "attestation");
  a.session_digest = get_digest(j, "session_digest", "attestation");
  a.signature_base64 = get_string(j, "signature", "attestation");
  a.signed_at = Timestamp::parse_seconds(get_string(j, "signed_at", "attestation"));
  return a;
}

}  // namespace veritas
