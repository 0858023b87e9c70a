#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "veritas/observer.hpp"

namespace veritas {

// Session configuration: flat key-value text, one "key = value" per line,
// '#' comments. Multi-valued keys (include, exclude, metric_pattern,
// framework.<name>, seed.<name>) repeat.
struct ToolConfig {
  ObserverConfig observer;
  std::vector<std::pair<std::string, std::string>> frameworks;
  std::vector<std::pair<std::string, std::int64_t>> seeds;
  std::string service_endpoint;  // optional default for seal
};

ToolConfig parse_config(std::string_view text);
std::string render_config(const ToolConfig& config);

ToolConfig load_config_file(const std::filesystem::path& path);

}  // namespace veritas
