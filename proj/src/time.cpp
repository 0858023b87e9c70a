#include "veritas/time.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "veritas/errors.hpp"

namespace veritas {

namespace {

// Days-from-civil algorithm; avoids timegm portability questions and keeps
// parsing exact for the fixed UTC format.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Fields {
  int year, month, day, hour, minute, second;
};

Fields split_utc(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  // civil-from-days
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  Fields f;
  f.year = static_cast<int>(y + (m <= 2));
  f.month = static_cast<int>(m);
  f.day = static_cast<int>(d);
  f.hour = static_cast<int>(rem / 3600);
  f.minute = static_cast<int>((rem % 3600) / 60);
  f.second = static_cast<int>(rem % 60);
  return f;
}

bool parse_fields(std::string_view s, Fields& f, int& millis, bool with_millis) {
  // YYYY-MM-DDTHH:MM:SS[.mmm]Z
  const std::size_t want = with_millis ? 24 : 20;
  if (s.size() != want) return false;
  auto digit = [&](std::size_t i) { return s[i] >= '0' && s[i] <= '9'; };
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u}) {
    if (!digit(i)) return false;
  }
  if (s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':') return false;
  auto num = [&](std::size_t i, std::size_t n) {
    int v = 0;
    for (std::size_t k = 0; k < n; ++k) v = v * 10 + (s[i + k] - '0');
    return v;
  };
  f.year = num(0, 4);
  f.month = num(5, 2);
  f.day = num(8, 2);
  f.hour = num(11, 2);
  f.minute = num(14, 2);
  f.second = num(17, 2);
  millis = 0;
  std::size_t zpos = 19;
  if (with_millis) {
    if (s[19] != '.' || !digit(20) || !digit(21) || !digit(22)) return false;
    millis = num(20, 3);
    zpos = 23;
  }
  if (s[zpos] != 'Z') return false;
  if (f.month < 1 || f.month > 12 || f.day < 1 || f.day > 31) return false;
  if (f.hour > 23 || f.minute > 59 || f.second > 60) return false;
  return true;
}

Timestamp assemble(const Fields& f, int millis) {
  std::int64_t days = days_from_civil(f.year, f.month, f.day);
  std::int64_t secs = days * 86400 + f.hour * 3600 + f.minute * 60 + f.second;
  return Timestamp{secs * 1000 + millis};
}

}  // namespace

Timestamp Timestamp::now() {
  using namespace std::chrono;
  return Timestamp{duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
}

std::string Timestamp::rfc3339_seconds() const {
  std::int64_t secs = ms / 1000;
  if (ms < 0 && ms % 1000 != 0) secs -= 1;
  Fields f = split_utc(secs);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", f.year, f.month, f.day, f.hour,
                f.minute, f.second);
  return buf;
}

std::string Timestamp::rfc3339_millis() const {
  std::int64_t secs = ms / 1000;
  std::int64_t frac = ms % 1000;
  if (frac < 0) {
    frac += 1000;
    secs -= 1;
  }
  Fields f = split_utc(secs);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", f.year, f.month, f.day,
                f.hour, f.minute, f.second, static_cast<int>(frac));
  return buf;
}

Timestamp Timestamp::parse_seconds(std::string_view s) {
  Fields f;
  int millis = 0;
  if (!parse_fields(s, f, millis, false)) {
    fail(Errc::bad_config, "not an RFC3339 second-precision UTC timestamp: " + std::string(s));
  }
  return assemble(f, 0);
}

Timestamp Timestamp::parse_millis(std::string_view s) {
  Fields f;
  int millis = 0;
  if (!parse_fields(s, f, millis, true)) {
    fail(Errc::bad_config, "not an RFC3339 millisecond-precision UTC timestamp: " + std::string(s));
  }
  return assemble(f, millis);
}

}  // namespace veritas
