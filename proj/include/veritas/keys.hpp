#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace veritas {

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);  // throws on bad input

class PublicKey;

// A 4096-bit RSA keypair. Signing is RSA-PSS with SHA-256 and salt length
// equal to the hash length; the exact scheme every verifier (including
// third-party tooling) must apply.
class RsaKeyPair {
public:
  static RsaKeyPair generate(int bits = 4096);
  static RsaKeyPair from_private_pem(std::string_view pem, const std::string& passphrase);

  // PKCS#8 PEM encrypted with AES-256-CBC under the passphrase.
  std::string private_pem(const std::string& passphrase) const;
  std::string public_pem() const;
  int bits() const;

  std::string sign_pss_sha256(std::string_view message) const;  // raw signature bytes

  RsaKeyPair(RsaKeyPair&&) noexcept;
  RsaKeyPair& operator=(RsaKeyPair&&) noexcept;
  ~RsaKeyPair();

private:
  RsaKeyPair();
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class PublicKey {
public:
  static PublicKey from_pem(std::string_view pem);

  bool verify_pss_sha256(std::string_view message, std::string_view signature) const;
  std::string pem() const;

  PublicKey(PublicKey&&) noexcept;
  PublicKey& operator=(PublicKey&&) noexcept;
  PublicKey(const PublicKey&);
  PublicKey& operator=(const PublicKey&);
  ~PublicKey();

private:
  PublicKey();
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace veritas
