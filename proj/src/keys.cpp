#include "veritas/keys.hpp"

#include <openssl/bio.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rsa.h>

#include <cstring>

#include "veritas/errors.hpp"

namespace veritas {

namespace {

[[noreturn]] void ssl_fail(Errc code, const std::string& what) {
  char buf[256] = {0};
  ERR_error_string_n(ERR_get_error(), buf, sizeof buf);
  fail(code, what + " (" + buf + ")");
}

struct BioDeleter {
  void operator()(BIO* b) const { BIO_free(b); }
};
using BioPtr = std::unique_ptr<BIO, BioDeleter>;

struct PkeyDeleter {
  void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

std::string bio_to_string(BIO* bio) {
  char* data = nullptr;
  long len = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(len));
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.resize(4 * ((bytes.size() + 2) / 3) + 1);
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) fail(Errc::malformed_response, "base64 length not a multiple of 4");
  std::string out;
  out.resize(3 * (text.size() / 4) + 1);
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) fail(Errc::malformed_response, "invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock ignores '=' padding; trim it back off.
  if (!text.empty() && text[text.size() - 1] == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

// ---- RsaKeyPair ------------------------------------------------------------

struct RsaKeyPair::Impl {
  PkeyPtr key;
};

RsaKeyPair::RsaKeyPair() : impl_(std::make_unique<Impl>()) {}
RsaKeyPair::RsaKeyPair(RsaKeyPair&&) noexcept = default;
RsaKeyPair& RsaKeyPair::operator=(RsaKeyPair&&) noexcept = default;
RsaKeyPair::~RsaKeyPair() = default;

RsaKeyPair RsaKeyPair::generate(int bits) {
  EVP_PKEY* raw = EVP_RSA_gen(static_cast<unsigned int>(bits));
  if (!raw) ssl_fail(Errc::keystore_io_failure, "RSA key generation failed");
  RsaKeyPair kp;
  kp.impl_->key.reset(raw);
  return kp;
}

RsaKeyPair RsaKeyPair::from_private_pem(std::string_view pem, const std::string& passphrase) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  if (!bio) ssl_fail(Errc::keystore_io_failure, "BIO alloc failed");
  EVP_PKEY* raw = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr,
                                          const_cast<char*>(passphrase.c_str()));
  if (!raw) ssl_fail(Errc::keystore_io_failure, "cannot decrypt private key");
  RsaKeyPair kp;
  kp.impl_->key.reset(raw);
  return kp;
}

std::string RsaKeyPair::private_pem(const std::string& passphrase) const {
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (!bio) ssl_fail(Errc::keystore_io_failure, "BIO alloc failed");
  if (PEM_write_bio_PKCS8PrivateKey(bio.get(), impl_->key.get(), EVP_aes_256_cbc(),
                                    passphrase.c_str(), static_cast<int>(passphrase.size()),
                                    nullptr, nullptr) != 1) {
    ssl_fail(Errc::keystore_io_failure, "cannot encrypt private key");
  }
  return bio_to_string(bio.get());
}

std::string RsaKeyPair::public_pem() const {
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (!bio) ssl_fail(Errc::keystore_io_failure, "BIO alloc failed");
  if (PEM_write_bio_PUBKEY(bio.get(), impl_->key.get()) != 1) {
    ssl_fail(Errc::keystore_io_failure, "cannot encode public key");
  }
  return bio_to_string(bio.get());
}

int RsaKeyPair::bits() const { return EVP_PKEY_bits(impl_->key.get()); }

std::string RsaKeyPair::sign_pss_sha256(std::string_view message) const {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) ssl_fail(Errc::keystore_io_failure, "ctx alloc failed");
  std::string sig;
  EVP_PKEY_CTX* pctx = nullptr;
  bool ok = EVP_DigestSignInit(ctx, &pctx, EVP_sha256(), nullptr, impl_->key.get()) == 1 &&
            EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) == 1 &&
            EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, RSA_PSS_SALTLEN_DIGEST) == 1;
  std::size_t sig_len = 0;
  ok = ok &&
       EVP_DigestSign(ctx, nullptr, &sig_len, reinterpret_cast<const unsigned char*>(message.data()),
                      message.size()) == 1;
  if (ok) {
    sig.resize(sig_len);
    ok = EVP_DigestSign(ctx, reinterpret_cast<unsigned char*>(sig.data()), &sig_len,
                        reinterpret_cast<const unsigned char*>(message.data()),
                        message.size()) == 1;
    sig.resize(sig_len);
  }
  EVP_MD_CTX_free(ctx);
  if (!ok) ssl_fail(Errc::keystore_io_failure, "signing failed");
  return sig;
}

// ---- PublicKey -------------------------------------------------------------

struct PublicKey::Impl {
  PkeyPtr key;
  std::string pem;
};

PublicKey::PublicKey() : impl_(std::make_unique<Impl>()) {}
PublicKey::PublicKey(PublicKey&&) noexcept = default;
PublicKey& PublicKey::operator=(PublicKey&&) noexcept = default;
PublicKey::~PublicKey() = default;

PublicKey::PublicKey(const PublicKey& other) : impl_(std::make_unique<Impl>()) {
  *this = PublicKey::from_pem(other.impl_->pem);
}

PublicKey& PublicKey::operator=(const PublicKey& other) {
  if (this != &other) *this = PublicKey::from_pem(other.impl_->pem);
  return *this;
}

PublicKey PublicKey::from_pem(std::string_view pem) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  if (!bio) ssl_fail(Errc::key_unavailable, "BIO alloc failed");
  EVP_PKEY* raw = PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr);
  if (!raw) ssl_fail(Errc::key_unavailable, "not a PEM public key");
  PublicKey pk;
  pk.impl_->key.reset(raw);
  pk.impl_->pem = std::string(pem);
  return pk;
}

std::string PublicKey::pem() const { return impl_->pem; }

bool PublicKey::verify_pss_sha256(std::string_view message, std::string_view signature) const {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) return false;
  EVP_PKEY_CTX* pctx = nullptr;
  bool ok = EVP_DigestVerifyInit(ctx, &pctx, EVP_sha256(), nullptr, impl_->key.get()) == 1 &&
            EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) == 1 &&
            EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, RSA_PSS_SALTLEN_DIGEST) == 1 &&
            EVP_DigestVerify(ctx, reinterpret_cast<const unsigned char*>(signature.data()),
                             signature.size(),
                             reinterpret_cast<const unsigned char*>(message.data()),
                             message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  ERR_clear_error();
  return ok;
}

}  // namespace veritas
