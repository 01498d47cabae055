#include "caaas/curve.hpp"

#include <array>

#include "caaas/config.hpp"
#include "caaas/digest.hpp"
#include "caaas/embedded_config.hpp"
#include "caaas/error.hpp"

namespace caaas {

struct PointAccess {
  static CurvePoint make(BigInt x, BigInt y, std::uint64_t id) {
    return CurvePoint(std::move(x), std::move(y), id);
  }
};

namespace {

void mod_in_place(BigInt& v, const BigInt& m) { mpz_mod(v.get_mpz_t(), v.get_mpz_t(), m.get_mpz_t()); }

BigInt mod(const BigInt& v, const BigInt& m) {
  BigInt r;
  mpz_mod(r.get_mpz_t(), v.get_mpz_t(), m.get_mpz_t());
  return r;
}

BigInt inverse(const BigInt& v, const BigInt& m) {
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), v.get_mpz_t(), m.get_mpz_t()) == 0) {
    throw Error(Errc::InvalidArgument, "value not invertible");
  }
  return r;
}

std::uint64_t fingerprint(const CurveParams::Spec& s) {
  // FNV-1a over the canonical hex of every defining integer.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& text) {
    for (char c : text) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const BigInt* v : {&s.p, &s.a, &s.b, &s.gx, &s.gy, &s.n}) mix(v->get_str(16));
  mix(std::to_string(s.cofactor));
  return h == 0 ? 1 : h;
}

std::size_t byte_length(const BigInt& v) { return (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8; }

// Jacobian coordinates: (X, Y, Z) represents (X/Z^2, Y/Z^3); Z = 0 is O.
struct Jacobian {
  BigInt X, Y, Z;
  bool infinity() const { return Z == 0; }
};

class JacobianMath {
 public:
  explicit JacobianMath(const CurveParams& params) : p_(params.p()), a_(params.a()) {}

  Jacobian from_affine(const CurvePoint& pt) const {
    if (pt.is_infinity()) return {1, 1, 0};
    return {pt.x(), pt.y(), 1};
  }

  void to_affine(const Jacobian& j, BigInt& x, BigInt& y) const {
    BigInt zi = inverse(j.Z, p_);
    BigInt zi2 = zi * zi;
    mod_in_place(zi2, p_);
    x = j.X * zi2;
    mod_in_place(x, p_);
    y = j.Y * zi2;
    mod_in_place(y, p_);
    y *= zi;
    mod_in_place(y, p_);
  }

  Jacobian dbl(const Jacobian& q) const {
    if (q.infinity() || q.Y == 0) return {1, 1, 0};
    BigInt xx = q.X * q.X;
    mod_in_place(xx, p_);
    BigInt yy = q.Y * q.Y;
    mod_in_place(yy, p_);
    BigInt yyyy = yy * yy;
    mod_in_place(yyyy, p_);
    BigInt zz = q.Z * q.Z;
    mod_in_place(zz, p_);
    BigInt s = 4 * q.X * yy;
    mod_in_place(s, p_);
    BigInt zzzz = zz * zz;
    mod_in_place(zzzz, p_);
    BigInt m = 3 * xx + a_ * zzzz;
    mod_in_place(m, p_);
    Jacobian r;
    r.X = m * m - 2 * s;
    mod_in_place(r.X, p_);
    r.Y = m * (s - r.X) - 8 * yyyy;
    mod_in_place(r.Y, p_);
    r.Z = 2 * q.Y * q.Z;
    mod_in_place(r.Z, p_);
    return r;
  }

  Jacobian add(const Jacobian& l, const Jacobian& r) const {
    if (l.infinity()) return r;
    if (r.infinity()) return l;
    BigInt z1z1 = l.Z * l.Z;
    mod_in_place(z1z1, p_);
    BigInt z2z2 = r.Z * r.Z;
    mod_in_place(z2z2, p_);
    BigInt u1 = l.X * z2z2;
    mod_in_place(u1, p_);
    BigInt u2 = r.X * z1z1;
    mod_in_place(u2, p_);
    BigInt s1 = l.Y * r.Z;
    mod_in_place(s1, p_);
    s1 *= z2z2;
    mod_in_place(s1, p_);
    BigInt s2 = r.Y * l.Z;
    mod_in_place(s2, p_);
    s2 *= z1z1;
    mod_in_place(s2, p_);
    if (u1 == u2) {
      if (s1 == s2) return dbl(l);
      return {1, 1, 0};
    }
    BigInt h = u2 - u1;
    mod_in_place(h, p_);
    BigInt rr = s2 - s1;
    mod_in_place(rr, p_);
    BigInt hh = h * h;
    mod_in_place(hh, p_);
    BigInt hhh = hh * h;
    mod_in_place(hhh, p_);
    BigInt v = u1 * hh;
    mod_in_place(v, p_);
    Jacobian out;
    out.X = rr * rr - hhh - 2 * v;
    mod_in_place(out.X, p_);
    out.Y = rr * (v - out.X) - s1 * hhh;
    mod_in_place(out.Y, p_);
    out.Z = l.Z * r.Z;
    mod_in_place(out.Z, p_);
    out.Z *= h;
    mod_in_place(out.Z, p_);
    return out;
  }

 private:
  const BigInt& p_;
  const BigInt& a_;
};

void check_same_curve(const CurveParams& params, const CurvePoint& pt) {
  if (!pt.is_infinity() && pt.curve_id() != params.id()) {
    throw Error(Errc::MismatchedCurve, "point belongs to a different curve than " + params.name());
  }
}

// Raw multiply used both by the public entry points and by parameter
// validation (which must not go through the counters' public path twice).
CurvePoint multiply(const CurveParams& params, const BigInt& k, const CurvePoint& pt) {
  if (pt.is_infinity() || k == 0) return CurvePoint::infinity();
  BigInt e = abs(k);
  JacobianMath jm(params);
  Jacobian base = jm.from_affine(pt);
  Jacobian acc{1, 1, 0};
  for (long bit = static_cast<long>(mpz_sizeinbase(e.get_mpz_t(), 2)) - 1; bit >= 0; --bit) {
    acc = jm.dbl(acc);
    if (mpz_tstbit(e.get_mpz_t(), static_cast<mp_bitcnt_t>(bit))) acc = jm.add(acc, base);
  }
  if (acc.infinity()) return CurvePoint::infinity();
  BigInt x, y;
  jm.to_affine(acc, x, y);
  if (k < 0) y = mod(-y, params.p());
  return PointAccess::make(std::move(x), std::move(y), params.id());
}

BigInt parse_integer(const std::string& text) {
  BigInt v;
  int rc = 0;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    rc = v.set_str(text.substr(2), 16);
  } else {
    rc = v.set_str(text, 10);
  }
  if (rc != 0) throw Error(Errc::ConfigError, "bad integer literal '" + text + "'");
  return v;
}

}  // namespace

struct CurveParams::Data {
  Spec spec;
  CurvePoint base;
  std::size_t field_bytes = 0;
  std::size_t scalar_bytes = 0;
  std::uint64_t id = 0;
};

CurveParams::CurveParams(const Spec& spec) {
  auto fail = [&spec](const std::string& why) {
    throw Error(Errc::InvalidParams, (spec.name.empty() ? std::string("curve") : spec.name) + ": " + why);
  };
  if (spec.p <= 3) fail("p must exceed 3");
  if (mpz_probab_prime_p(spec.p.get_mpz_t(), 40) == 0) fail("p is not prime");
  if (spec.a < 0 || spec.a >= spec.p || spec.b < 0 || spec.b >= spec.p) fail("coefficients not reduced mod p");
  BigInt disc = 4 * spec.a * spec.a * spec.a + 27 * spec.b * spec.b;
  if (mod(disc, spec.p) == 0) fail("singular curve (4a^3 + 27b^2 = 0 mod p)");
  if (spec.n < 2 || mpz_probab_prime_p(spec.n.get_mpz_t(), 40) == 0) fail("base point order is not prime");
  if (spec.cofactor == 0) fail("cofactor must be positive");

  auto data = std::make_shared<Data>();
  data->spec = spec;
  data->field_bytes = byte_length(spec.p);
  data->scalar_bytes = byte_length(spec.n);
  data->id = fingerprint(spec);
  data_ = data;
  if (spec.gx < 0 || spec.gx >= spec.p || spec.gy < 0 || spec.gy >= spec.p) fail("base point not canonical");
  CurvePoint g = PointAccess::make(spec.gx, spec.gy, data->id);
  if (!contains(g)) fail("base point is not on the curve");
  data->base = g;
  if (!multiply(*this, spec.n, g).is_infinity()) fail("n x G != O");
}

const std::string& CurveParams::name() const { return data_->spec.name; }
const BigInt& CurveParams::p() const { return data_->spec.p; }
const BigInt& CurveParams::a() const { return data_->spec.a; }
const BigInt& CurveParams::b() const { return data_->spec.b; }
const BigInt& CurveParams::n() const { return data_->spec.n; }
unsigned long CurveParams::cofactor() const { return data_->spec.cofactor; }
const CurvePoint& CurveParams::base() const { return data_->base; }
std::size_t CurveParams::field_bytes() const { return data_->field_bytes; }
std::size_t CurveParams::scalar_bytes() const { return data_->scalar_bytes; }
std::uint64_t CurveParams::id() const { return data_->id; }
const CurveParams::Spec& CurveParams::spec() const { return data_->spec; }

CurvePoint CurveParams::point(const BigInt& x, const BigInt& y) const {
  if (x < 0 || x >= p() || y < 0 || y >= p()) throw Error(Errc::InvalidPoint, "non-canonical coordinate");
  CurvePoint pt = PointAccess::make(x, y, id());
  if (!contains(pt)) throw Error(Errc::InvalidPoint, "point not on " + name());
  return pt;
}

bool CurveParams::contains(const CurvePoint& pt) const {
  if (pt.is_infinity()) return true;
  if (pt.curve_id() != id()) return false;
  BigInt lhs = mod(pt.y() * pt.y(), p());
  BigInt rhs = mod(pt.x() * pt.x() * pt.x() + a() * pt.x() + b(), p());
  return lhs == rhs;
}

Scalar Scalar::reduce(const CurveParams& params, const BigInt& v) { return Scalar(mod(v, params.n())); }

Scalar Scalar::canonical(const CurveParams& params, const BigInt& v) {
  if (v < 0 || v >= params.n()) throw Error(Errc::InvalidScalar, "scalar outside [0, n)");
  return Scalar(v);
}

CurvePoint negate(const CurveParams& params, const CurvePoint& pt) {
  check_same_curve(params, pt);
  if (pt.is_infinity()) return pt;
  return PointAccess::make(pt.x(), mod(-pt.y(), params.p()), params.id());
}

CurvePoint point_add(const CurveParams& params, const CurvePoint& lhs, const CurvePoint& rhs) {
  check_same_curve(params, lhs);
  check_same_curve(params, rhs);
  if (lhs.is_infinity()) return rhs;
  if (rhs.is_infinity()) return lhs;
  const BigInt& p = params.p();
  BigInt lambda;
  if (lhs.x() == rhs.x()) {
    if (mod(lhs.y() + rhs.y(), p) == 0) return CurvePoint::infinity();
    // Doubling: lambda = (3x^2 + a) / 2y.
    lambda = mod((3 * lhs.x() * lhs.x() + params.a()) * inverse(2 * lhs.y(), p), p);
  } else {
    lambda = mod((rhs.y() - lhs.y()) * inverse(mod(rhs.x() - lhs.x(), p), p), p);
  }
  BigInt x3 = mod(lambda * lambda - lhs.x() - rhs.x(), p);
  BigInt y3 = mod(lambda * (lhs.x() - x3) - lhs.y(), p);
  return PointAccess::make(std::move(x3), std::move(y3), params.id());
}

CurvePoint point_sub(const CurveParams& params, const CurvePoint& lhs, const CurvePoint& rhs) {
  return point_add(params, lhs, negate(params, rhs));
}

CurvePoint scalar_mul(const CurveParams& params, const BigInt& s, const CurvePoint& pt) {
  check_same_curve(params, pt);
  ++op_counters().scalar_mults;
  return multiply(params, s, pt);
}

CurvePoint scalar_mul(const CurveParams& params, const Scalar& s, const CurvePoint& pt) {
  return scalar_mul(params, s.value(), pt);
}

OpCounters& op_counters() {
  thread_local OpCounters counters;
  return counters;
}

void reset_op_counters() { op_counters() = OpCounters{}; }

bool sqrt_mod(const BigInt& v, const BigInt& p, BigInt& root) {
  BigInt a = mod(v, p);
  if (a == 0) {
    root = 0;
    return true;
  }
  if (mpz_legendre(a.get_mpz_t(), p.get_mpz_t()) != 1) return false;
  if (mod(p, 4) == 3) {
    BigInt e = (p + 1) / 4;
    mpz_powm(root.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    return true;
  }
  // Tonelli-Shanks: p - 1 = q * 2^s with q odd.
  BigInt q = p - 1;
  unsigned long s = 0;
  while (mpz_even_p(q.get_mpz_t())) {
    q /= 2;
    ++s;
  }
  BigInt z = 2;
  while (mpz_legendre(z.get_mpz_t(), p.get_mpz_t()) != -1) ++z;
  BigInt c, t, r;
  mpz_powm(c.get_mpz_t(), z.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
  mpz_powm(t.get_mpz_t(), a.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
  BigInt e = (q + 1) / 2;
  mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
  unsigned long m = s;
  while (t != 1) {
    unsigned long i = 0;
    BigInt tt = t;
    while (tt != 1) {
      tt = mod(tt * tt, p);
      ++i;
    }
    BigInt b = c;
    for (unsigned long j = 0; j + 1 < m - i; ++j) b = mod(b * b, p);
    m = i;
    c = mod(b * b, p);
    t = mod(t * c, p);
    r = mod(r * b, p);
  }
  root = r;
  return true;
}

CurvePoint hash_to_point(const CurveParams& params, ByteView id) {
  if (id.empty()) throw Error(Errc::InvalidArgument, "hash_to_point needs a non-empty id");
  const BigInt& p = params.p();
  Bytes identity(id.begin(), id.end());
  for (std::uint32_t counter = 0; counter < 1000; ++counter) {
    Bytes ctr;
    put_u32(ctr, counter);
    std::array<Bytes, 2> parts{identity, ctr};
    Digest256 d = sha256(frame_parts(kH1Tag, parts));
    BigInt x = mod(from_bytes(d), p);
    BigInt rhs = mod(x * x * x + params.a() * x + params.b(), p);
    BigInt y;
    if (!sqrt_mod(rhs, p, y)) continue;
    BigInt other = mod(-y, p);
    if (other < y) y = other;
    CurvePoint candidate = PointAccess::make(x, y, params.id());
    if (params.cofactor() != 1) {
      candidate = scalar_mul(params, BigInt(params.cofactor()), candidate);
    }
    if (!candidate.is_infinity()) return candidate;
  }
  throw Error(Errc::HashToPointFailure, "no subgroup point after 1000 counters on " + params.name());
}

Scalar hash_to_scalar(const CurveParams& params, std::string_view domain_tag, std::span<const Bytes> parts) {
  Digest512 d = sha512(frame_parts(domain_tag, parts));
  BigInt v = mod(from_bytes(d), params.n() - 1) + 1;
  return Scalar::canonical(params, v);
}

Scalar hash_timestamp(const CurveParams& params, std::uint64_t timestamp_ms) {
  Bytes t;
  put_u64(t, timestamp_ms);
  std::array<Bytes, 1> parts{t};
  return hash_to_scalar(params, kH2Tag, parts);
}

Bytes to_fixed(const BigInt& v, std::size_t width) {
  if (v < 0 || byte_length(v) > width) throw Error(Errc::WidthMismatch, "integer does not fit width");
  Bytes out(width, 0);
  std::size_t count = 0;
  if (v != 0) {
    std::size_t len = byte_length(v);
    mpz_export(out.data() + (width - len), &count, 1, 1, 1, 0, v.get_mpz_t());
  }
  return out;
}

BigInt from_bytes(ByteView data) {
  BigInt v;
  if (!data.empty()) mpz_import(v.get_mpz_t(), data.size(), 1, 1, 1, 0, data.data());
  return v;
}

std::size_t encoded_point_size(const CurveParams& params, std::uint8_t tag) {
  if (tag == 0x00) return 1;
  if (tag == 0x04) return 1 + 2 * params.field_bytes();
  throw Error(Errc::DecodeError, "unknown point tag");
}

Bytes encode_point(const CurveParams& params, const CurvePoint& pt) {
  check_same_curve(params, pt);
  if (pt.is_infinity()) return Bytes{0x00};
  Bytes out{0x04};
  append(out, to_fixed(pt.x(), params.field_bytes()));
  append(out, to_fixed(pt.y(), params.field_bytes()));
  return out;
}

CurvePoint decode_point(const CurveParams& params, ByteView data) {
  if (data.empty()) throw Error(Errc::DecodeError, "empty point encoding");
  if (data.size() != encoded_point_size(params, data[0])) throw Error(Errc::DecodeError, "bad point length");
  if (data[0] == 0x00) return CurvePoint::infinity();
  const std::size_t w = params.field_bytes();
  BigInt x = from_bytes(data.subspan(1, w));
  BigInt y = from_bytes(data.subspan(1 + w, w));
  if (x >= params.p() || y >= params.p()) throw Error(Errc::DecodeError, "non-canonical coordinate");
  CurvePoint pt = PointAccess::make(std::move(x), std::move(y), params.id());
  if (!params.contains(pt)) throw Error(Errc::DecodeError, "point not on curve");
  return pt;
}

Bytes encode_scalar(const CurveParams& params, const Scalar& s) { return to_fixed(s.value(), params.scalar_bytes()); }

Scalar decode_scalar(const CurveParams& params, ByteView data) {
  if (data.size() != params.scalar_bytes()) throw Error(Errc::DecodeError, "bad scalar length");
  BigInt v = from_bytes(data);
  if (v >= params.n()) throw Error(Errc::DecodeError, "non-canonical scalar");
  return Scalar::canonical(params, v);
}

CurveParams load_curve(std::string_view config_text) {
  auto cfg = KeyValueConfig::parse(config_text);
  CurveParams::Spec spec;
  spec.name = cfg.get("name");
  spec.p = parse_integer(cfg.get("p"));
  spec.a = parse_integer(cfg.get("a"));
  spec.b = parse_integer(cfg.get("b"));
  spec.gx = parse_integer(cfg.get("gx"));
  spec.gy = parse_integer(cfg.get("gy"));
  spec.n = parse_integer(cfg.get("n"));
  spec.cofactor = static_cast<unsigned long>(cfg.get_u64_or("cofactor", 1));
  return CurveParams(spec);
}

CurveParams curve_preset(std::string_view name) {
  if (name == "toy17") {
    static const CurveParams toy = load_curve(embedded::kToy17Curve);
    return toy;
  }
  if (name == "prod256") {
    static const CurveParams prod = load_curve(embedded::kProd256Curve);
    return prod;
  }
  throw Error(Errc::UnknownProfile, "unknown curve preset '" + std::string(name) + "'");
}

}  // namespace caaas
