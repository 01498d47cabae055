#include "caaas/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "caaas/digest.hpp"
#include "caaas/error.hpp"

namespace caaas {

namespace {

constexpr std::string_view kRngSeedTag = "caaas/rng/seed";
constexpr std::string_view kRngForkTag = "caaas/rng/fork";
constexpr std::string_view kSessionKeyTag = "caaas/session-key";

std::array<std::uint8_t, 32> key_from_seed(std::uint64_t seed) {
  Bytes s;
  put_u64(s, seed);
  std::array<Bytes, 1> parts{s};
  return sha256(frame_parts(kRngSeedTag, parts));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(key_from_seed(seed)) { ensure_sodium(); }

Rng::Rng(const std::array<std::uint8_t, 32>& key) : key_(key) { ensure_sodium(); }

void Rng::refill() {
  static const std::array<std::uint8_t, 64> zeros{};
  static const std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
  crypto_stream_chacha20_xor_ic(buffer_.data(), zeros.data(), zeros.size(), nonce.data(), block_, key_.data());
  ++block_;
  used_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (used_ == buffer_.size()) refill();
    std::size_t n = std::min(out.size() - done, buffer_.size() - used_);
    std::memcpy(out.data() + done, buffer_.data() + used_, n);
    used_ += n;
    done += n;
  }
}

std::uint64_t Rng::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::InvalidArgument, "uniform_below(0)");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

BigInt Rng::uniform_below(const BigInt& bound) {
  if (bound <= 0) throw Error(Errc::InvalidArgument, "uniform_below(<=0)");
  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const std::size_t bytes = (bits + 7) / 8;
  Bytes buf(bytes);
  for (;;) {
    fill(buf);
    // Mask the top byte down to the bound's bit length before rejecting.
    const std::size_t spare = bytes * 8 - bits;
    buf[0] &= static_cast<std::uint8_t>(0xff >> spare);
    BigInt v = from_bytes(buf);
    if (v < bound) return v;
  }
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

Rng Rng::fork(std::string_view label) const {
  std::array<Bytes, 2> parts{Bytes(key_.begin(), key_.end()), to_bytes(label)};
  return Rng(sha256(frame_parts(kRngForkTag, parts)));
}

Scalar random_nonzero_scalar(const CurveParams& params, Rng& rng) {
  return Scalar::canonical(params, rng.uniform_below(BigInt(params.n() - 1)) + 1);
}

SymmetricKey SymmetricKey::from_bytes(ByteView bytes) {
  if (bytes.size() != kSize) throw Error(Errc::WidthMismatch, "symmetric key must be 32 bytes");
  std::array<std::uint8_t, kSize> a{};
  std::copy(bytes.begin(), bytes.end(), a.begin());
  return SymmetricKey(a);
}

SymmetricKey SymmetricKey::random(Rng& rng) {
  std::array<std::uint8_t, kSize> a{};
  rng.fill(a);
  return SymmetricKey(a);
}

SymmetricKey::~SymmetricKey() { wipe(); }

void SymmetricKey::wipe() { sodium_memzero(bytes_.data(), bytes_.size()); }

bool operator==(const SymmetricKey& l, const SymmetricKey& r) {
  return sodium_memcmp(l.bytes_.data(), r.bytes_.data(), SymmetricKey::kSize) == 0;
}

NonceValue NonceGenerator::next(Rng& rng) {
  for (;;) {
    NonceValue v;
    rng.fill(v.bytes);
    if (issued_.insert(v).second) return v;
  }
}

bool check_freshness(TimestampMs sent, TimestampMs now, std::uint64_t window_ms) {
  if (now < sent) return false;
  return now.ms - sent.ms <= window_ms;
}

void append_box(Bytes& out, const SealedBox& box) {
  append(out, box.nonce);
  put_u32(out, static_cast<std::uint32_t>(box.ciphertext.size()));
  append(out, box.ciphertext);
  append(out, box.tag);
}

Bytes encode_box(const SealedBox& box) {
  Bytes out;
  append_box(out, box);
  return out;
}

SealedBox read_box(ByteReader& in) {
  SealedBox box;
  auto nonce = in.take(SealedBox::kNonceSize);
  std::copy(nonce.begin(), nonce.end(), box.nonce.begin());
  std::uint32_t len = in.u32();
  auto ct = in.take(len);
  box.ciphertext.assign(ct.begin(), ct.end());
  auto tag = in.take(SealedBox::kTagSize);
  std::copy(tag.begin(), tag.end(), box.tag.begin());
  return box;
}

SealedBox seal(const SymmetricKey& key, ByteView plaintext, Rng& rng) {
  static_assert(SealedBox::kNonceSize == crypto_aead_chacha20poly1305_ietf_NPUBBYTES);
  static_assert(SealedBox::kTagSize == crypto_aead_chacha20poly1305_ietf_ABYTES);
  SealedBox box;
  rng.fill(box.nonce);
  box.ciphertext.resize(plaintext.size());
  unsigned long long tag_len = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt_detached(box.ciphertext.data(), box.tag.data(), &tag_len,
                                                     plaintext.data(), plaintext.size(), nullptr, 0, nullptr,
                                                     box.nonce.data(), key.bytes().data());
  return box;
}

Bytes open(const SymmetricKey& key, const SealedBox& box) {
  Bytes plain(box.ciphertext.size());
  if (crypto_aead_chacha20poly1305_ietf_decrypt_detached(plain.data(), nullptr, box.ciphertext.data(),
                                                         box.ciphertext.size(), box.tag.data(), nullptr, 0,
                                                         box.nonce.data(), key.bytes().data()) != 0) {
    throw Error(Errc::AuthFailure, "sealed box failed authentication");
  }
  return plain;
}

SessionKey derive_session_key(const CurveParams& params, ByteView x_q, ByteView x_c, ByteView x_s) {
  const std::size_t w = params.field_bytes();
  if (x_q.size() != w || x_c.size() != w || x_s.size() != w) {
    throw Error(Errc::WidthMismatch, "session-key inputs must be field-width coordinates");
  }
  std::array<Bytes, 3> parts{Bytes(x_q.begin(), x_q.end()), Bytes(x_c.begin(), x_c.end()),
                             Bytes(x_s.begin(), x_s.end())};
  Scalar k = hash_to_scalar(params, kH3Tag, parts);
  std::array<Bytes, 1> kparts{encode_scalar(params, k)};
  return SessionKey{k, SymmetricKey(sha256(frame_parts(kSessionKeyTag, kparts)))};
}

}  // namespace caaas
