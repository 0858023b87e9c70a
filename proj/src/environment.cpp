#include "veritas/environment.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <thread>

namespace veritas {

namespace {

std::string read_cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon == std::string::npos) break;
      std::string v = line.substr(colon + 1);
      const auto start = v.find_first_not_of(" \t");
      return start == std::string::npos ? "" : v.substr(start);
    }
  }
  return "";
}

std::uint64_t read_total_ram() {
  std::ifstream in("/proc/meminfo");
  std::string key;
  std::uint64_t kb = 0;
  std::string unit;
  while (in >> key >> kb >> unit) {
    if (key == "MemTotal:") return kb * 1024;
  }
  return 0;
}

std::string read_gpu_model() {
  FILE* pipe = popen("nvidia-smi --query-gpu=name --format=csv,noheader 2>/dev/null", "r");
  if (!pipe) return "";
  char buf[256] = {0};
  std::string out;
  if (std::fgets(buf, sizeof buf, pipe)) out = buf;
  const int rc = pclose(pipe);
  if (rc != 0) return "";
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out;
}

}  // namespace

EnvironmentFingerprint capture_environment(
    Tier tier, std::vector<std::pair<std::string, std::string>> frameworks,
    std::vector<std::pair<std::string, std::int64_t>> seeds) {
  std::sort(frameworks.begin(), frameworks.end());
  std::sort(seeds.begin(), seeds.end());

  EnvironmentFingerprint env;
  env.tier = tier;
  env.framework_versions = std::move(frameworks);
  env.random_seeds = std::move(seeds);
  if (tier == Tier::minimal) return env;

  utsname uts{};
  if (uname(&uts) == 0) {
    env.os_name_version = std::string(uts.sysname) + " " + uts.release;
  }
  env.cpu_model = read_cpu_model();
  env.cpu_cores = std::max(1u, std::thread::hardware_concurrency());
  env.gpu_model = read_gpu_model();
  env.total_ram_bytes = read_total_ram();
  return env;
}

}  // namespace veritas
