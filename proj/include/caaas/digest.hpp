#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "caaas/bytes.hpp"

namespace caaas {

using Digest256 = std::array<std::uint8_t, 32>;
using Digest512 = std::array<std::uint8_t, 64>;

// Calls sodium_init() once per process.
void ensure_sodium();

Digest256 sha256(ByteView data);
Digest512 sha512(ByteView data);

// Length-prefixed framing: tag then each part as u32 length ‖ bytes. Used by
// every domain-separated hash in the library so that part boundaries are
// unambiguous.
Bytes frame_parts(std::string_view tag, std::span<const Bytes> parts);

}  // namespace caaas
