#pragma once

#include <string>
#include <utility>
#include <vector>

#include "veritas/model.hpp"

namespace veritas {

// Deterministic plain-text rendering of a sealed session; the bundle's
// report.txt. A pure function of the session: verifiers regenerate it and
// compare bytes.
std::string render_report(const SessionRecord& session);

// manifest.txt: "<sha256hex>  <path>\n" per entry, sorted by path.
std::string render_manifest(const std::vector<std::pair<std::string, Digest>>& entries);

// Last printed occurrence of each metric across all runs, in first-seen
// name order. The attested "final" values.
std::vector<MetricRecord> final_metrics(const SessionRecord& session);

}  // namespace veritas
