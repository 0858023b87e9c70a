#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "veritas/model.hpp"

namespace veritas {

// Captures the machine fingerprint at the requested tier. Minimal carries
// only the author-declared frameworks and seeds; full adds OS, CPU, GPU
// (empty when no accelerator is observed) and total RAM.
EnvironmentFingerprint capture_environment(
    Tier tier, std::vector<std::pair<std::string, std::string>> frameworks,
    std::vector<std::pair<std::string, std::int64_t>> seeds);

}  // namespace veritas
