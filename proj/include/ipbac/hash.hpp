#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "ipbac/error.hpp"

namespace ipbac {

using Hash32 = std::array<std::uint8_t, 32>;

inline constexpr Hash32 kGenesisHash{}; // 32 zero bytes

inline Hash32 sha256(std::span<const std::uint8_t> data) {
    Hash32 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        raise(Errc::io_error, "SHA-256 digest failed");
    }
    return out;
}

inline Hash32 sha256(std::string_view data) {
    return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(bytes.size() * 2, '0');
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out[2 * i]     = digits[bytes[i] >> 4];
        out[2 * i + 1] = digits[bytes[i] & 0x0f];
    }
    return out;
}

inline std::string to_hex(const Hash32& h) { return to_hex(std::span(h.data(), h.size())); }

/// Strict lowercase-hex decode. Uppercase digits are rejected on purpose:
/// the persisted chain format is defined as lowercase, and a lenient parser
/// would let case-flipping bit flips round-trip to the same bytes.
inline std::optional<std::vector<std::uint8_t>> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]);
        int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

inline std::optional<Hash32> hash_from_hex(std::string_view hex) {
    if (hex.size() != 64) return std::nullopt;
    auto bytes = from_hex(hex);
    if (!bytes) return std::nullopt;
    Hash32 out{};
    std::copy(bytes->begin(), bytes->end(), out.begin());
    return out;
}

} // namespace ipbac
