#include "caaas/digest.hpp"

#include <sodium.h>

#include <stdexcept>

namespace caaas {

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}

Digest256 sha256(ByteView data) {
  Digest256 out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Digest512 sha512(ByteView data) {
  Digest512 out{};
  crypto_hash_sha512(out.data(), data.data(), data.size());
  return out;
}

Bytes frame_parts(std::string_view tag, std::span<const Bytes> parts) {
  Bytes out;
  put_u32(out, static_cast<std::uint32_t>(tag.size()));
  append(out, ByteView(reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()));
  for (const auto& part : parts) {
    put_u32(out, static_cast<std::uint32_t>(part.size()));
    append(out, part);
  }
  return out;
}

}  // namespace caaas
