#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace url_lens {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text);

std::string hex64(std::uint64_t value);

}  // namespace url_lens
