#include "veritas/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "veritas/errors.hpp"

namespace veritas {

namespace {

std::string trim(std::string_view v) {
  const auto a = v.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return "";
  const auto b = v.find_last_not_of(" \t\r");
  return std::string(v.substr(a, b - a + 1));
}

}  // namespace

ToolConfig parse_config(std::string_view text) {
  ToolConfig cfg;
  cfg.observer.metric_patterns = default_metric_patterns();

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(Errc::bad_config, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      fail(Errc::bad_config, "config line " + std::to_string(line_no) + ": empty key");
    }

    if (key == "tier") {
      cfg.observer.tier = tier_from_string(value);
    } else if (key == "source_root") {
      cfg.observer.source_root = value;
    } else if (key == "telemetry_interval_seconds") {
      cfg.observer.telemetry_interval_seconds = value;
    } else if (key == "include") {
      cfg.observer.include_globs.push_back(value);
    } else if (key == "exclude") {
      cfg.observer.exclude_globs.push_back(value);
    } else if (key == "metric_pattern") {
      cfg.observer.metric_patterns.push_back(MetricPattern{value, 1, 2});
    } else if (key == "max_file_bytes") {
      char* end = nullptr;
      cfg.observer.max_file_bytes = std::strtoull(value.c_str(), &end, 10);
      if (end == nullptr || *end != '\0') {
        fail(Errc::bad_config, "config line " + std::to_string(line_no) + ": bad max_file_bytes");
      }
    } else if (key == "service") {
      cfg.service_endpoint = value;
    } else if (key.rfind("framework.", 0) == 0) {
      const std::string name = key.substr(10);
      if (name.empty()) fail(Errc::bad_config, "framework key without a name");
      cfg.frameworks.emplace_back(name, value);
    } else if (key.rfind("seed.", 0) == 0) {
      const std::string name = key.substr(5);
      if (name.empty()) fail(Errc::bad_config, "seed key without a name");
      char* end = nullptr;
      const long long v = std::strtoll(value.c_str(), &end, 10);
      if (end == nullptr || *end != '\0') {
        fail(Errc::bad_config,
             "config line " + std::to_string(line_no) + ": seed value is not an integer");
      }
      cfg.seeds.emplace_back(name, v);
    } else {
      fail(Errc::bad_config, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

std::string render_config(const ToolConfig& cfg) {
  std::ostringstream out;
  out << "# kveritas session configuration\n";
  out << "tier = " << to_string(cfg.observer.tier) << "\n";
  out << "source_root = " << cfg.observer.source_root.string() << "\n";
  out << "telemetry_interval_seconds = " << cfg.observer.telemetry_interval_seconds << "\n";
  out << "max_file_bytes = " << cfg.observer.max_file_bytes << "\n";
  for (const auto& g : cfg.observer.include_globs) out << "include = " << g << "\n";
  for (const auto& g : cfg.observer.exclude_globs) out << "exclude = " << g << "\n";
  const auto defaults = default_metric_patterns();
  for (std::size_t i = defaults.size(); i < cfg.observer.metric_patterns.size(); ++i) {
    out << "metric_pattern = " << cfg.observer.metric_patterns[i].pattern << "\n";
  }
  for (const auto& [name, version] : cfg.frameworks) {
    out << "framework." << name << " = " << version << "\n";
  }
  for (const auto& [name, value] : cfg.seeds) out << "seed." << name << " = " << value << "\n";
  if (!cfg.service_endpoint.empty()) out << "service = " << cfg.service_endpoint << "\n";
  return out.str();
}

ToolConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::not_initialized, "cannot read config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

}  // namespace veritas
