#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "veritas/model.hpp"

namespace veritas {

// A line-oriented metric pattern: an ECMAScript regex with one capture
// group for the metric name and one for its value. The value group must
// match a decimal-number lexeme.
struct MetricPattern {
  std::string pattern;
  int name_group = 1;
  int value_group = 2;
};

// The default grammar: <name><sep><number> where name is
// [A-Za-z_][A-Za-z0-9_./-]*, sep is ':' or '=' (with optional surrounding
// whitespace), and number is an optionally signed decimal with optional
// exponent. Matches styles like "val_accuracy: 0.913" and "loss=1.065107".
std::vector<MetricPattern> default_metric_patterns();

// Incremental scanner used by the observer while pumping a stream. Feeds
// may split lines arbitrarily; offsets refer to the raw byte stream. Lines
// longer than an internal cap are never metric candidates. Invalid UTF-8 is
// replaced before matching.
class MetricScanner {
public:
  MetricScanner(const std::vector<MetricPattern>& patterns, StreamKind stream);
  ~MetricScanner();
  MetricScanner(const MetricScanner&) = delete;
  MetricScanner& operator=(const MetricScanner&) = delete;

  void feed(std::string_view bytes, Timestamp at);
  void finish(Timestamp at);  // flush a trailing unterminated line
  std::vector<MetricRecord> take();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-shot parse over a complete transcript. Each line is matched against
// each pattern in order; the first match per line wins. Unmatched lines
// yield no records.
std::vector<MetricRecord> parse_metrics(std::string_view transcript,
                                        const std::vector<MetricPattern>& patterns,
                                        StreamKind stream, Timestamp observed_at);

}  // namespace veritas
