#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rcov {

struct Digest256 {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  /// Throws std::invalid_argument unless text is 64 hex digits.
  static Digest256 from_hex(std::string_view text);

  friend bool operator==(const Digest256&, const Digest256&) = default;
  friend auto operator<=>(const Digest256&, const Digest256&) = default;
};

Digest256 sha256(std::span<const std::uint8_t> data);
Digest256 sha256(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> data);

}  // namespace rcov
