#include <gtest/gtest.h>

#include <set>

#include "caaas/crypto.hpp"
#include "caaas/digest.hpp"
#include "caaas/error.hpp"

using namespace caaas;

TEST(Rng, DeterministicAndForked) {
  Rng a(42), b(42), c(43);
  std::uint64_t va = a.next_u64();
  EXPECT_EQ(va, b.next_u64());
  EXPECT_NE(va, c.next_u64());
  Rng f1 = a.fork("x"), f2 = a.fork("x"), f3 = a.fork("y");
  std::uint64_t v1 = f1.next_u64();
  EXPECT_EQ(v1, f2.next_u64());
  EXPECT_NE(v1, f3.next_u64());
}

TEST(Rng, UniformBounds) {
  Rng r(1);
  for (int i = 0; i < 2000; ++i) {
    EXPECT_LT(r.uniform_below(7), 7u);
    double u = r.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  const CurveParams toy = curve_preset("toy17");
  std::set<long> seen;
  for (int i = 0; i < 2000; ++i) seen.insert(random_nonzero_scalar(toy, r).value().get_si());
  EXPECT_EQ(seen.size(), 18u);
  EXPECT_EQ(*seen.begin(), 1);
  EXPECT_EQ(*seen.rbegin(), 18);
}

TEST(Aead, RoundTripAndTamper) {
  Rng r(3);
  SymmetricKey k = SymmetricKey::random(r);
  Bytes msg = to_bytes("hello child");
  SealedBox box = seal(k, msg, r);
  EXPECT_EQ(open(k, box), msg);

  Bytes enc = encode_box(box);
  ByteReader rd(enc);
  EXPECT_EQ(read_box(rd), box);

  for (std::size_t i = 0; i < box.ciphertext.size(); ++i) {
    SealedBox t = box;
    t.ciphertext[i] ^= 1;
    EXPECT_THROW(open(k, t), Error);
  }
  SealedBox t = box;
  t.tag[0] ^= 0x80;
  EXPECT_THROW(open(k, t), Error);
  t = box;
  t.nonce[0] ^= 1;
  EXPECT_THROW(open(k, t), Error);
  SymmetricKey other = SymmetricKey::random(r);
  try {
    open(other, box);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AuthFailure);
  }
}

TEST(Aead, FreshNoncePerSeal) {
  Rng r(4);
  SymmetricKey k = SymmetricKey::random(r);
  EXPECT_NE(seal(k, to_bytes("x"), r).nonce, seal(k, to_bytes("x"), r).nonce);
}

TEST(SymmetricKey, WidthAndWipe) {
  EXPECT_THROW(SymmetricKey::from_bytes(Bytes(31)), Error);
  Rng r(5);
  SymmetricKey k = SymmetricKey::random(r);
  k.wipe();
  EXPECT_EQ(k, SymmetricKey{});
}

TEST(Nonce, NeverRepeats) {
  Rng r(6);
  NonceGenerator g;
  std::set<NonceValue> seen;
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(seen.insert(g.next(r)).second);
  EXPECT_EQ(g.issued(), 1000u);
}

TEST(Freshness, Window) {
  EXPECT_TRUE(check_freshness({100}, {100}, 2000));
  EXPECT_TRUE(check_freshness({100}, {2100}, 2000));
  EXPECT_FALSE(check_freshness({100}, {2101}, 2000));
  EXPECT_FALSE(check_freshness({200}, {100}, 2000));  // from the future
}

// Golden values from an independent Python implementation.
TEST(SessionKey, Golden) {
  const CurveParams toy = curve_preset("toy17");
  SessionKey sk = derive_session_key(toy, Bytes{10}, Bytes{6}, Bytes{3});
  EXPECT_EQ(sk.k.value(), BigInt(6));
  EXPECT_EQ(to_hex(sk.key.view()), "2a5739479cc8eb766f4e069ed6d8d2c5d411a12a5befa3a4d2ba5d78e685ab13");
  EXPECT_THROW(derive_session_key(toy, Bytes{10, 0}, Bytes{6}, Bytes{3}), Error);
}
