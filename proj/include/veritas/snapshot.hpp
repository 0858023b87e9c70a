#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "veritas/model.hpp"

namespace veritas {

struct SnapshotOptions {
  std::vector<std::string> include_globs;  // empty = everything
  std::vector<std::string> exclude_globs;  // applied on top of the built-in set
  std::uint64_t max_file_bytes = 64ull << 20;
  bool apply_default_excludes = true;
};

// Globs the snapshot filter always applies: the session directory itself,
// VCS metadata, and common artifact directories. The snapshot attests code,
// not data or checkpoints.
std::vector<std::string> default_exclude_globs();

// Matches '/'-separated relative paths. '*' and '?' stop at separators;
// '**' crosses them ("src/**/*.py", "**/__pycache__/**").
bool glob_match(std::string_view pattern, std::string_view path);

// Deterministic snapshot of the tree under root: recursive enumeration,
// include/exclude filtering, byte-lexicographic path order, SHA-256 per
// file. Symlinks are recorded by their target string, never followed.
// Unreadable or non-regular entries become per-file error entries; the
// snapshot still completes.
SourceSnapshot snapshot_sources(const std::filesystem::path& root, const SnapshotOptions& options);

}  // namespace veritas
