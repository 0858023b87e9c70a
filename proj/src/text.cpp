#include "veritas/text.hpp"

namespace veritas {

namespace {

// Returns the sequence length at position i, or 0 when invalid.
std::size_t utf8_len_at(std::string_view in, std::size_t i) {
  const unsigned char c = static_cast<unsigned char>(in[i]);
  std::size_t len = 0;
  if (c < 0x80) len = 1;
  else if ((c & 0xe0) == 0xc0) len = 2;
  else if ((c & 0xf0) == 0xe0) len = 3;
  else if ((c & 0xf8) == 0xf0) len = 4;
  if (len == 0 || i + len > in.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(in[i + k]) & 0xc0) != 0x80) return 0;
  }
  return len;
}

}  // namespace

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    const std::size_t len = utf8_len_at(bytes, i);
    if (len == 0) return false;
    i += len;
  }
  return true;
}

std::string sanitize_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const std::size_t len = utf8_len_at(bytes, i);
    if (len == 0) {
      out.append("\xef\xbf\xbd");  // U+FFFD
      i += 1;
    } else {
      out.append(bytes.substr(i, len));
      i += len;
    }
  }
  return out;
}

}  // namespace veritas
