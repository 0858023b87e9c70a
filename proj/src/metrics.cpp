#include "veritas/metrics.hpp"

#include <cstdlib>
#include <regex>

#include "veritas/errors.hpp"
#include "veritas/text.hpp"

namespace veritas {

namespace {

// Lines longer than this are not metric candidates (still counted for
// offsets). Keeps regex cost bounded on binary or log-spam streams.
constexpr std::size_t kMaxMetricLine = 8192;

// Optionally signed decimal with optional fraction and exponent; nothing
// else (no inf/nan/hex forms).
bool is_decimal_lexeme(const std::string& s) {
  std::size_t i = 0;
  auto digits = [&] {
    std::size_t n = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++n;
    return n;
  };
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  if (digits() == 0) return false;
  if (i < s.size() && s[i] == '.') {
    ++i;
    if (digits() == 0) return false;
  }
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    if (digits() == 0) return false;
  }
  return i == s.size();
}

}  // namespace

std::vector<MetricPattern> default_metric_patterns() {
  // Boundary lookaheads keep tokens like "12:30:45" or "3/10" from donating
  // a partial number as a value.
  return {MetricPattern{
      "([A-Za-z_][A-Za-z0-9_./-]*)[ \\t]*[:=][ \\t]*"
      "([-+]?[0-9]+(?:\\.[0-9]+)?(?:[eE][-+]?[0-9]+)?)(?![0-9A-Za-z._/:-])",
      1, 2}};
}

struct MetricScanner::Impl {
  std::vector<std::regex> regexes;
  std::vector<MetricPattern> patterns;
  StreamKind stream;
  std::string pending;         // current unterminated line
  std::uint64_t line_start = 0;  // stream offset of the pending line's first byte
  std::uint64_t consumed = 0;    // total bytes fed
  bool line_overflow = false;
  std::vector<MetricRecord> records;

  void match_line(const std::string& raw_line, std::uint64_t offset, Timestamp at) {
    if (raw_line.empty() || raw_line.size() > kMaxMetricLine) return;
    const std::string line = sanitize_utf8(raw_line);
    for (std::size_t p = 0; p < regexes.size(); ++p) {
      std::smatch m;
      if (!std::regex_search(line, m, regexes[p])) continue;
      const auto& pat = patterns[p];
      if (pat.name_group < 0 || pat.value_group < 0 ||
          static_cast<std::size_t>(pat.name_group) >= m.size() ||
          static_cast<std::size_t>(pat.value_group) >= m.size()) {
        continue;
      }
      MetricRecord rec;
      rec.name = m[static_cast<std::size_t>(pat.name_group)].str();
      rec.lexical_value = m[static_cast<std::size_t>(pat.value_group)].str();
      if (rec.name.empty() || !is_decimal_lexeme(rec.lexical_value)) continue;
      rec.numeric_value = std::strtod(rec.lexical_value.c_str(), nullptr);
      rec.stream = stream;
      rec.byte_offset = offset;
      rec.observed_at = at;
      records.push_back(std::move(rec));
      return;  // first match per line wins
    }
  }
};

MetricScanner::MetricScanner(const std::vector<MetricPattern>& patterns, StreamKind stream)
    : impl_(std::make_unique<Impl>()) {
  impl_->stream = stream;
  for (const auto& p : patterns) {
    try {
      impl_->regexes.emplace_back(p.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      fail(Errc::bad_config, "invalid metric pattern '" + p.pattern + "': " + e.what());
    }
    impl_->patterns.push_back(p);
  }
}

MetricScanner::~MetricScanner() = default;

void MetricScanner::feed(std::string_view bytes, Timestamp at) {
  auto& s = *impl_;
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::size_t nl = bytes.find('\n', i);
    if (nl == std::string_view::npos) {
      if (!s.line_overflow) {
        s.pending.append(bytes.substr(i));
        if (s.pending.size() > kMaxMetricLine) {
          s.pending.clear();
          s.line_overflow = true;
        }
      }
      s.consumed += bytes.size() - i;
      return;
    }
    std::string_view tail = bytes.substr(i, nl - i);
    std::string line;
    if (!s.line_overflow) {
      line = s.pending + std::string(tail);
    }
    s.pending.clear();
    const std::uint64_t offset = s.line_start;
    s.consumed += (nl - i) + 1;
    s.line_start = s.consumed;
    if (!s.line_overflow) {
      // Tolerate CRLF output.
      if (!line.empty() && line.back() == '\r') line.pop_back();
      s.match_line(line, offset, at);
    }
    s.line_overflow = false;
    i = nl + 1;
  }
}

void MetricScanner::finish(Timestamp at) {
  auto& s = *impl_;
  if (!s.line_overflow && !s.pending.empty()) {
    std::string line = std::move(s.pending);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    s.match_line(line, s.line_start, at);
  }
  s.pending.clear();
  s.line_overflow = false;
  s.line_start = s.consumed;
}

std::vector<MetricRecord> MetricScanner::take() { return std::move(impl_->records); }

std::vector<MetricRecord> parse_metrics(std::string_view transcript,
                                        const std::vector<MetricPattern>& patterns,
                                        StreamKind stream, Timestamp observed_at) {
  MetricScanner scanner(patterns, stream);
  scanner.feed(transcript, observed_at);
  scanner.finish(observed_at);
  return scanner.take();
}

}  // namespace veritas
