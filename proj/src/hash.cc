#include "pink/hash.h"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "pink/error.h"

namespace pink {

std::string Sha256Hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error(ErrorCode::kIo, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

FieldHasher& FieldHasher::Add(std::string_view field) {
  buffer_ += std::to_string(field.size());
  buffer_.push_back(':');
  buffer_.append(field);
  buffer_.push_back(';');
  return *this;
}

FieldHasher& FieldHasher::Add(long long value) {
  return Add(std::string_view(std::to_string(value)));
}

std::string FieldHasher::HexDigest() const { return Sha256Hex(buffer_); }

}  // namespace pink
