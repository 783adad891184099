#include "rcov/digest.hpp"

#include <stdexcept>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include "rcov/strings.hpp"

namespace rcov {

std::string Digest256::hex() const {
  return to_hex({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

Digest256 Digest256::from_hex(std::string_view text) {
  if (text.size() != 64) throw std::invalid_argument("digest must be 64 hex digits");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("digest must be 64 hex digits");
  };
  Digest256 d;
  for (std::size_t i = 0; i < 32; ++i) {
    d.bytes[i] = static_cast<std::uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
  }
  return d;
}

Digest256 sha256(std::span<const std::uint8_t> data) {
  Digest256 d;
  SHA256(data.data(), data.size(), d.bytes.data());
  return d;
}

Digest256 sha256(std::string_view data) {
  return sha256({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace rcov
