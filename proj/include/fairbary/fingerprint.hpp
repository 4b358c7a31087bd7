#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fairbary {

/// Lower-case hex SHA-256 of raw bytes.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);

/// SHA-256 over the IEEE-754 bytes of `values` in order.
std::string fingerprint(std::span<const double> values);

/// Counter-based seed derivation (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

}  // namespace fairbary
