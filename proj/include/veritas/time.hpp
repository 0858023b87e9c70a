#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace veritas {

// UTC instant with millisecond precision.
//
// Two fixed RFC 3339 renderings are used throughout the record format:
// second precision ("2026-01-02T03:04:05Z") for session creation and
// attestation timestamps, millisecond precision ("2026-01-02T03:04:05.678Z")
// everywhere else.
struct Timestamp {
  std::int64_t ms = 0;  // since the Unix epoch

  static Timestamp now();
  static Timestamp from_ms(std::int64_t v) { return Timestamp{v}; }

  std::string rfc3339_seconds() const;  // truncates sub-second part
  std::string rfc3339_millis() const;

  // Strict parsers: exactly the corresponding rendering, UTC "Z" only.
  static Timestamp parse_seconds(std::string_view s);
  static Timestamp parse_millis(std::string_view s);

  auto operator<=>(const Timestamp&) const = default;
};

}  // namespace veritas
