#include "veritas/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "veritas/canonical.hpp"

namespace veritas {

namespace {

std::string fmt_duration(std::int64_t ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%03lld s", static_cast<long long>(ms / 1000),
                static_cast<long long>(ms % 1000));
  return buf;
}

std::string join_command(const std::vector<std::string>& argv) {
  std::string out;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

}  // namespace

std::vector<MetricRecord> final_metrics(const SessionRecord& session) {
  std::vector<std::string> order;
  std::map<std::string, MetricRecord> last;
  for (const auto& run : session.runs()) {
    for (const auto& m : run.metrics) {
      if (!last.count(m.name)) order.push_back(m.name);
      last[m.name] = m;
    }
  }
  std::vector<MetricRecord> out;
  out.reserve(order.size());
  for (const auto& name : order) out.push_back(last[name]);
  return out;
}

std::string render_report(const SessionRecord& session) {
  std::ostringstream out;
  out << "KVERITAS ATTESTATION REPORT\n";
  out << "===========================\n\n";
  out << "Session id:     " << session.session_id() << "\n";
  out << "Created (UTC):  " << session.created_at().rfc3339_seconds() << "\n";
  out << "Tier:           " << to_string(session.tier()) << "\n";
  out << "Session runs:   " << session.run_count() << " linked run"
      << (session.run_count() == 1 ? "" : "s") << "\n";
  out << "Session digest: " << session_digest(session).rendered() << "\n";
  if (session.hmc()) {
    const auto& hmc = *session.hmc();
    out << "HMC score:      " << hmc.score_string() << " / " << hmc.verdict() << "\n";
    if (hmc.flags.empty()) {
      out << "HMC flags:      none\n";
    } else {
      bool first = true;
      for (const auto& f : hmc.flags) {
        out << (first ? "HMC flags:      " : "                ");
        out << to_string(f.code) << " (run " << f.run_index << ": " << f.detail << ")\n";
        first = false;
      }
    }
  }
  out << "\nEnvironment\n-----------\n";
  const auto& env = session.environment();
  out << "Frameworks:     ";
  if (env.framework_versions.empty()) {
    out << "none declared\n";
  } else {
    for (std::size_t i = 0; i < env.framework_versions.size(); ++i) {
      if (i) out << "; ";
      out << env.framework_versions[i].first << " " << env.framework_versions[i].second;
    }
    out << "\n";
  }
  out << "Random seeds:   ";
  if (env.random_seeds.empty()) {
    out << "none declared\n";
  } else {
    for (std::size_t i = 0; i < env.random_seeds.size(); ++i) {
      if (i) out << "; ";
      out << env.random_seeds[i].first << "=" << env.random_seeds[i].second;
    }
    out << "\n";
  }
  if (env.tier == Tier::full) {
    out << "OS:             " << env.os_name_version << "\n";
    out << "CPU:            " << env.cpu_model << " (" << env.cpu_cores << " cores)\n";
    out << "GPU:            " << (env.gpu_model.empty() ? "none observed" : env.gpu_model) << "\n";
    out << "RAM:            " << env.total_ram_bytes << " bytes\n";
  }

  out << "\nFinal metrics\n-------------\n";
  std::vector<std::string> metric_order;
  std::map<std::string, std::pair<MetricRecord, std::uint32_t>> metric_last;
  for (const auto& run : session.runs()) {
    for (const auto& m : run.metrics) {
      if (!metric_last.count(m.name)) metric_order.push_back(m.name);
      metric_last[m.name] = {m, run.run_index};
    }
  }
  if (metric_order.empty()) {
    out << "none\n";
  } else {
    for (const auto& name : metric_order) {
      const auto& [m, run_index] = metric_last[name];
      out << name << " = " << m.lexical_value << "  (run " << run_index << ", "
          << to_string(m.stream) << ")\n";
    }
  }

  for (const auto& run : session.runs()) {
    out << "\nRun " << run.run_index << "\n-----\n";
    out << "Command:        " << join_command(run.command) << "\n";
    out << "Started (UTC):  " << run.started_at.rfc3339_millis() << "\n";
    out << "Ended (UTC):    " << run.ended_at.rfc3339_millis() << "\n";
    out << "Duration:       " << fmt_duration(run.wall_ms()) << "\n";
    out << "Exit code:      " << run.exit_code << "\n";
    out << "Stdout:         " << run.stdout_bytes << " bytes, " << run.stdout_digest.rendered()
        << "\n";
    out << "Stderr:         " << run.stderr_bytes << " bytes, " << run.stderr_digest.rendered()
        << "\n";
    out << "Metrics:        ";
    if (run.metrics.empty()) {
      out << "none\n";
    } else {
      for (std::size_t i = 0; i < run.metrics.size(); ++i) {
        if (i) out << "; ";
        out << run.metrics[i].name << "=" << run.metrics[i].lexical_value;
      }
      out << "\n";
    }
    out << "Source hash:    " << snapshot_digest(run.sources_before).rendered() << " (before)\n";
    out << "                " << snapshot_digest(run.sources_after).rendered() << " (after)\n";
    out << "Source files:   " << run.sources_after.total_files << " files, "
        << run.sources_after.total_bytes << " bytes\n";
    out << "Telemetry:      " << run.telemetry.samples.size() << " samples every "
        << run.telemetry.interval_seconds << " s\n";
  }
  return out.str();
}

std::string render_manifest(const std::vector<std::pair<std::string, Digest>>& entries) {
  auto sorted = entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [path, digest] : sorted) {
    out += digest.hex;
    out += "  ";
    out += path;
    out += "\n";
  }
  return out;
}

}  // namespace veritas
