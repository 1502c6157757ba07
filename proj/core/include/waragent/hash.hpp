#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace waragent {

/// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

/// splitmix64 step; the standard 0x9E3779B97F4A7C15 increment.
std::uint64_t splitmix64(std::uint64_t x);

/// Documented per-agent stream derivation: every random draw in a run flows
/// from one master seed through (country index, round), so streams are
/// independent and reproducible.
std::uint64_t derive_seed(std::uint64_t master, int country_index, int round);

}  // namespace waragent
