#include "veritas/snapshot.hpp"

#include <algorithm>
#include <set>
#include <system_error>

#include "veritas/errors.hpp"
#include "veritas/text.hpp"

namespace veritas {

namespace fs = std::filesystem;

std::vector<std::string> default_exclude_globs() {
  return {
      ".veritas/**", ".git/**", ".hg/**", ".svn/**",
      "**/__pycache__/**", "**/*.pyc",
      "venv/**", ".venv/**", "**/node_modules/**",
      "checkpoints/**", "**/.ipynb_checkpoints/**",
  };
}

namespace {

bool match_segments(std::string_view pattern, std::string_view path);

// Single-segment match: '*' and '?' do not cross '/'.
bool match_one(std::string_view pat, std::string_view seg) {
  std::size_t p = 0, s = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (s < seg.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == seg[s])) {
      ++p, ++s;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = s;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      s = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

std::pair<std::string_view, std::string_view> split_head(std::string_view v) {
  std::size_t slash = v.find('/');
  if (slash == std::string_view::npos) return {v, {}};
  return {v.substr(0, slash), v.substr(slash + 1)};
}

bool match_segments(std::string_view pattern, std::string_view path) {
  if (pattern.empty()) return path.empty();
  auto [phead, ptail] = split_head(pattern);
  if (phead == "**") {
    // '**' may match zero or more whole segments.
    if (match_segments(ptail, path)) return true;
    if (path.empty()) return false;
    return match_segments(pattern, split_head(path).second);
  }
  if (path.empty()) return false;
  auto [shead, stail] = split_head(path);
  if (!match_one(phead, shead)) return false;
  if (ptail.empty() && pattern.back() != '/') return stail.empty();
  return match_segments(ptail, stail);
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view path) {
  return match_segments(pattern, path);
}

namespace {

bool any_match(const std::vector<std::string>& globs, const std::string& path) {
  for (const auto& g : globs) {
    if (glob_match(g, path)) return true;
  }
  return false;
}

}  // namespace

SourceSnapshot snapshot_sources(const fs::path& root, const SnapshotOptions& options) {
  std::error_code ec;
  if (!fs::exists(root, ec) || !fs::is_directory(root, ec)) {
    fail(Errc::bad_path, "source root does not exist: " + root.string());
  }

  std::vector<std::string> excludes =
      options.apply_default_excludes ? default_exclude_globs() : std::vector<std::string>{};
  excludes.insert(excludes.end(), options.exclude_globs.begin(), options.exclude_globs.end());

  SourceSnapshot snap;
  snap.root = ".";

  std::vector<std::string> paths;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) fail(Errc::bad_path, "cannot enumerate " + root.string() + ": " + ec.message());
  const fs::recursive_directory_iterator end;
  while (it != end) {
    const fs::directory_entry& entry = *it;
    std::error_code sec;
    std::string rel_str = entry.path().lexically_relative(root).generic_string();
    const bool is_dir = entry.is_directory(sec) && !entry.is_symlink(sec);
    if (is_dir) {
      // Prune excluded directories outright ("name/**" patterns).
      if (any_match(excludes, rel_str + "/")) it.disable_recursion_pending();
    } else if (!any_match(excludes, rel_str) &&
               (options.include_globs.empty() || any_match(options.include_globs, rel_str))) {
      paths.push_back(std::move(rel_str));
    }
    it.increment(sec);
    if (sec) break;
  }
  std::sort(paths.begin(), paths.end());

  // Recorded paths must be valid UTF-8 (they name zip entries and live in
  // the canonical form). Files whose names cannot be represented become
  // visible error entries; sanitized names are deduplicated.
  std::set<std::string> used_paths;
  auto recordable_path = [&](const std::string& raw) {
    std::string p = is_valid_utf8(raw) ? raw : sanitize_utf8(raw);
    int n = 1;
    while (!used_paths.insert(p).second) {
      p += "~" + std::to_string(++n);
      // keep probing; collisions only arise from sanitized twins
    }
    return p;
  };

  for (const auto& rel : paths) {
    const fs::path abs = root / fs::path(rel);
    FileDigest f;
    f.path = recordable_path(rel);
    std::error_code sec;
    if (!is_valid_utf8(rel)) {
      f.error = "non-utf8-path";
      snap.files.push_back(std::move(f));
      continue;
    }
    const fs::file_status st = fs::symlink_status(abs, sec);
    if (sec) {
      f.error = "unreadable";
      snap.files.push_back(std::move(f));
      continue;
    }
    if (fs::is_symlink(st)) {
      const fs::path target = fs::read_symlink(abs, sec);
      if (sec) {
        f.error = "unreadable";
      } else {
        // The digest binds the recorded target string.
        f.link_target = sanitize_utf8(target.generic_string());
        f.size_bytes = f.link_target.size();
        f.digest = sha256_bytes(f.link_target);
      }
      snap.files.push_back(std::move(f));
      continue;
    }
    if (!fs::is_regular_file(st)) {
      f.error = "not-a-regular-file";
      snap.files.push_back(std::move(f));
      continue;
    }
    const std::uint64_t size = fs::file_size(abs, sec);
    if (sec) {
      f.error = "unreadable";
      snap.files.push_back(std::move(f));
      continue;
    }
    if (size > options.max_file_bytes) continue;  // oversize files are not code
    try {
      f.digest = sha256_file(abs);
      f.size_bytes = size;
    } catch (const Error&) {
      f.error = "unreadable";
      f.digest = Digest{};
      f.size_bytes = 0;
    }
    snap.files.push_back(std::move(f));
  }

  // Order and totals are over the recorded paths (sanitization can perturb
  // the raw enumeration order).
  std::sort(snap.files.begin(), snap.files.end(),
            [](const FileDigest& a, const FileDigest& b) { return a.path < b.path; });
  snap.total_files = snap.files.size();
  for (const auto& f : snap.files) snap.total_bytes += f.size_bytes;
  return snap;
}

}  // namespace veritas
