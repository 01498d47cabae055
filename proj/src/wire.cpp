#include "caaas/wire.hpp"

#include <sstream>

#include "caaas/error.hpp"

namespace caaas::wire {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10ffff ||
        (cp >= 0xd800 && cp <= 0xdfff)) {
      return false;
    }
    i += len;
  }
  return true;
}

void put_id(Bytes& out, const std::string& id) {
  if (!valid_identity(id)) throw Error(Errc::InvalidArgument, "identity must be 1-64 bytes of UTF-8");
  out.push_back(static_cast<std::uint8_t>(id.size()));
  out.insert(out.end(), id.begin(), id.end());
}

std::string read_id(ByteReader& in) {
  auto len = in.u8();
  auto raw = in.take(len);
  std::string id(raw.begin(), raw.end());
  if (!valid_identity(id)) throw Error(Errc::DecodeError, "invalid identity");
  return id;
}

void put_point(Bytes& out, const CurveParams& params, const CurvePoint& pt) { append(out, encode_point(params, pt)); }

CurvePoint read_point(ByteReader& in, const CurveParams& params) {
  auto size = encoded_point_size(params, in.peek());
  return decode_point(params, in.take(size));
}

void put_bigint(Bytes& out, const BigInt& v) {
  std::size_t len = v == 0 ? 0 : (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  put_u16(out, static_cast<std::uint16_t>(len));
  append(out, to_fixed(v, len));
}

BigInt read_bigint(ByteReader& in) {
  auto len = in.u16();
  auto raw = in.take(len);
  if (len > 0 && raw[0] == 0) throw Error(Errc::DecodeError, "non-minimal integer");
  return from_bytes(raw);
}

void put_short_str(Bytes& out, const std::string& s) {
  if (s.size() > 255) throw Error(Errc::InvalidArgument, "string too long");
  out.push_back(static_cast<std::uint8_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

std::string read_short_str(ByteReader& in) {
  auto len = in.u8();
  auto raw = in.take(len);
  return std::string(raw.begin(), raw.end());
}

TrustState read_state(ByteReader& in) {
  auto v = in.u8();
  if (v > static_cast<std::uint8_t>(TrustState::Blacklisted)) throw Error(Errc::DecodeError, "bad trust state");
  return static_cast<TrustState>(v);
}

Announcement read_announcement(ByteReader& in) {
  CurveParams::Spec spec;
  spec.name = read_short_str(in);
  spec.p = read_bigint(in);
  spec.a = read_bigint(in);
  spec.b = read_bigint(in);
  spec.gx = read_bigint(in);
  spec.gy = read_bigint(in);
  spec.n = read_bigint(in);
  spec.cofactor = in.u32();
  auto params = [&spec] {
    try {
      return CurveParams(spec);
    } catch (const Error& e) {
      throw Error(Errc::DecodeError, std::string("announced curve invalid: ") + e.what());
    }
  }();
  CurvePoint pk = read_point(in, params);
  auto count = in.u8();
  std::vector<std::string> ids;
  for (unsigned i = 0; i < count; ++i) ids.push_back(read_short_str(in));
  return Announcement{params, pk, std::move(ids)};
}

}  // namespace

bool valid_identity(std::string_view id) {
  return !id.empty() && id.size() <= kMaxIdentityBytes && valid_utf8(id);
}

Tag message_tag(const ProtocolMessage& msg) {
  return static_cast<Tag>(msg.index() + 1);
}

std::string_view message_name(const ProtocolMessage& msg) {
  static constexpr std::string_view kNames[] = {"Announcement",  "RegistrationRequest", "RegistrationResponse",
                                                "AuthRequest",   "AuthResponse",        "PeerInit",
                                                "PeerRelay",     "PeerChallenge",       "PeerProof",
                                                "Refusal",       "TrustNotice"};
  return kNames[msg.index()];
}

Bytes encode(const CurveParams& params, const ProtocolMessage& msg) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(message_tag(msg)));
  std::visit(Overloaded{
                 [&](const Announcement& m) {
                   const auto& s = m.params.spec();
                   put_short_str(out, s.name);
                   for (const BigInt* v : {&s.p, &s.a, &s.b, &s.gx, &s.gy, &s.n}) put_bigint(out, *v);
                   put_u32(out, static_cast<std::uint32_t>(s.cofactor));
                   put_point(out, m.params, m.public_key);
                   if (m.hash_ids.size() > 255) throw Error(Errc::InvalidArgument, "too many hash ids");
                   out.push_back(static_cast<std::uint8_t>(m.hash_ids.size()));
                   for (const auto& h : m.hash_ids) put_short_str(out, h);
                 },
                 [&](const RegistrationRequest& m) { put_id(out, m.id); },
                 [&](const RegistrationResponse& m) { append_box(out, m.sealed_auth_key); },
                 [&](const AuthRequest& m) {
                   put_id(out, m.id);
                   put_point(out, params, m.m_c);
                   put_point(out, params, m.r_c_star);
                   put_u64(out, m.t1.ms);
                 },
                 [&](const AuthResponse& m) {
                   put_point(out, params, m.m_s);
                   put_point(out, params, m.m_k);
                   put_u64(out, m.t2.ms);
                 },
                 [&](const PeerInit& m) {
                   append_box(out, m.e_target);
                   append_box(out, m.e_key);
                   append_box(out, m.e_nonce);
                 },
                 [&](const PeerRelay& m) {
                   append_box(out, m.e_initiator);
                   append_box(out, m.e_key);
                 },
                 [&](const PeerChallenge& m) {
                   append_box(out, m.e_responder);
                   append_box(out, m.e_nonce);
                 },
                 [&](const PeerProof& m) { append_box(out, m.e_nonce); },
                 [&](const Refusal& m) {
                   out.push_back(static_cast<std::uint8_t>(m.code));
                   put_short_str(out, m.subject);
                   out.push_back(static_cast<std::uint8_t>(m.state));
                 },
                 [&](const TrustNotice& m) {
                   put_id(out, m.id);
                   out.push_back(static_cast<std::uint8_t>(m.state));
                   put_u64(out, m.at.ms);
                 },
             },
             msg);
  return out;
}

ProtocolMessage decode(const CurveParams& params, ByteView bytes) {
  ByteReader in(bytes);
  auto tag = static_cast<Tag>(in.u8());
  ProtocolMessage msg = [&]() -> ProtocolMessage {
    switch (tag) {
      case Tag::Announcement: return read_announcement(in);
      case Tag::RegistrationRequest: return RegistrationRequest{read_id(in)};
      case Tag::RegistrationResponse: return RegistrationResponse{read_box(in)};
      case Tag::AuthRequest: {
        AuthRequest m;
        m.id = read_id(in);
        m.m_c = read_point(in, params);
        m.r_c_star = read_point(in, params);
        m.t1.ms = in.u64();
        return m;
      }
      case Tag::AuthResponse: {
        AuthResponse m;
        m.m_s = read_point(in, params);
        m.m_k = read_point(in, params);
        m.t2.ms = in.u64();
        return m;
      }
      case Tag::PeerInit: {
        PeerInit m;
        m.e_target = read_box(in);
        m.e_key = read_box(in);
        m.e_nonce = read_box(in);
        return m;
      }
      case Tag::PeerRelay: {
        PeerRelay m;
        m.e_initiator = read_box(in);
        m.e_key = read_box(in);
        return m;
      }
      case Tag::PeerChallenge: {
        PeerChallenge m;
        m.e_responder = read_box(in);
        m.e_nonce = read_box(in);
        return m;
      }
      case Tag::PeerProof: return PeerProof{read_box(in)};
      case Tag::Refusal: {
        Refusal m;
        auto raw = in.u8();
        std::string_view name = to_string(static_cast<Errc>(raw));
        if (name == "Unknown") throw Error(Errc::DecodeError, "unknown refusal code");
        m.code = static_cast<Errc>(raw);
        m.subject = read_short_str(in);
        m.state = read_state(in);
        return m;
      }
      case Tag::TrustNotice: {
        TrustNotice m;
        m.id = read_id(in);
        m.state = read_state(in);
        m.at.ms = in.u64();
        return m;
      }
    }
    throw Error(Errc::DecodeError, "unknown message tag");
  }();
  in.expect_done();
  return msg;
}

Announcement decode_announcement(ByteView bytes) {
  ByteReader in(bytes);
  if (static_cast<Tag>(in.u8()) != Tag::Announcement) throw Error(Errc::DecodeError, "not an announcement");
  auto a = read_announcement(in);
  in.expect_done();
  return a;
}

std::string to_transcript(std::span<const Bytes> messages) {
  std::string out;
  for (const auto& m : messages) {
    out += to_hex(m);
    out += '\n';
  }
  return out;
}

std::vector<Bytes> parse_transcript(std::string_view text) {
  std::vector<Bytes> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(from_hex(line));
  }
  return out;
}

}  // namespace caaas::wire
