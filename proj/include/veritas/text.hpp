#pragma once

#include <string>
#include <string_view>

namespace veritas {

bool is_valid_utf8(std::string_view bytes);

// Replaces invalid UTF-8 sequences with U+FFFD; deterministic.
std::string sanitize_utf8(std::string_view bytes);

}  // namespace veritas
