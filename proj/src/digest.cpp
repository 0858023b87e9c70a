#include "veritas/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>

#include "veritas/errors.hpp"

namespace veritas {

std::string to_hex(const unsigned char* data, std::size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0x0f]);
  }
  return out;
}

bool is_hex_digest(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

Digest Digest::from_rendered(std::string_view rendered) {
  constexpr std::string_view prefix = "sha256:";
  if (rendered.size() != prefix.size() + 64 ||
      rendered.substr(0, prefix.size()) != prefix ||
      !is_hex_digest(rendered.substr(prefix.size()))) {
    fail(Errc::malformed_digest, "not a sha256 digest: " + std::string(rendered));
  }
  return Digest{std::string(rendered.substr(prefix.size()))};
}

Sha256::Sha256() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    fail(Errc::io_error, "sha256 context init failed");
  }
  ctx_ = ctx;
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(const void* data, std::size_t len) {
  if (len == 0) return;
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len) != 1) {
    fail(Errc::io_error, "sha256 update failed");
  }
}

Digest Sha256::finish() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
  unsigned int raw_len = 0;
  auto* ctx = static_cast<EVP_MD_CTX*>(ctx_);
  if (EVP_DigestFinal_ex(ctx, raw.data(), &raw_len) != 1) {
    fail(Errc::io_error, "sha256 final failed");
  }
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  return Digest{to_hex(raw.data(), raw_len)};
}

Digest sha256_bytes(std::string_view bytes) {
  Sha256 h;
  h.update(bytes);
  return h.finish();
}

Digest sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open for hashing: " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    if (got > 0) h.update(buf.data(), static_cast<std::size_t>(got));
  }
  if (in.bad()) fail(Errc::io_error, "read error while hashing: " + path.string());
  return h.finish();
}

}  // namespace veritas
