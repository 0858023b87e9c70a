#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace veritas {

// SHA-256 digest, held as 64 lowercase hex characters.
// Rendered form is "sha256:<hex>".
struct Digest {
  std::string hex;

  std::string rendered() const { return "sha256:" + hex; }
  bool empty() const { return hex.empty(); }

  // Parses "sha256:<64 lowercase hex>"; throws on any other shape.
  static Digest from_rendered(std::string_view rendered);

  bool operator==(const Digest&) const = default;
};

// Matches ^[0-9a-f]{64}$.
bool is_hex_digest(std::string_view s);

// Streaming SHA-256 (OpenSSL EVP underneath).
class Sha256 {
public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len);
  void update(std::string_view bytes) { update(bytes.data(), bytes.size()); }

  // Finalizes and resets the context for reuse.
  Digest finish();

private:
  void* ctx_;
};

Digest sha256_bytes(std::string_view bytes);
Digest sha256_file(const std::filesystem::path& path);

std::string to_hex(const unsigned char* data, std::size_t len);

}  // namespace veritas
