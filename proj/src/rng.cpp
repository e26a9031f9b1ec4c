#include "mlsa/rng.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "invnorm_coefficients.hpp"

#if defined(__AVX512F__) && defined(__AVX512DQ__)
#define MLSA_AVX512 1
#include <immintrin.h>
#endif

namespace mlsa::rng {

namespace detail {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

constexpr double kLn2Hi = 0x1.62e42f8000000p-1;
constexpr double kLn2Lo = 0x1.be8e7bd651bd9p-27;
constexpr double kSqrtHalf = 0x1.6a09e667f3bcdp-1;

// atanh series: log(m) = 2t * sum_j kAtanh[j] t^{2j}, t = (m-1)/(m+1)
constexpr double kAtanh[10] = {
    1.0,
    0.3333333333333333,
    0.2,
    0.14285714285714285,
    0.1111111111111111,
    0.09090909090909091,
    0.07692307692307693,
    0.06666666666666667,
    0.058823529411764705,
    0.05263157894736842};

constexpr double kTwoPowM53 = 0x1p-53;

template <std::size_t N>
inline double horner(const double (&c)[N], double x) {
  double p = c[N - 1];
  for (std::size_t j = N - 1; j-- > 0;) p = std::fma(p, x, c[j]);
  return p;
}

inline double tail_magnitude(double s) {
  if (s <= 3.39) {
    const double xi = std::fma(s, kTailASa, kTailASb);
    return horner(kTailAP, xi) / horner(kTailAQ, xi);
  }
  if (s <= 5.0) {
    const double xi = std::fma(s, kTailBSa, kTailBSb);
    return horner(kTailBP, xi) / horner(kTailBQ, xi);
  }
  const double xi = std::fma(s, kTailCSa, kTailCSb);
  return horner(kTailCP, xi) / horner(kTailCQ, xi);
}

inline double uniform_from_bits(std::uint64_t x) {
  // odd numerator on the 2^-53 grid: never 0 or 1, exact under u -> 1-u
  return static_cast<double>(2 * (x >> 12) + 1) * kTwoPowM53;
}

}  // namespace

PhiloxBlock philox4x32(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                       std::uint32_t c3, std::uint32_t k0, std::uint32_t k1) {
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
    const std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t l0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t l1 = static_cast<std::uint32_t>(p1);
    c0 = h1 ^ c1 ^ k0;
    c1 = l1;
    c2 = h0 ^ c3 ^ k1;
    c3 = l0;
    k0 += kW0;
    k1 += kW1;
  }
  return {c0, c1, c2, c3};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double neg_log(double q) {
  std::uint64_t bits;
  std::memcpy(&bits, &q, sizeof bits);
  std::int64_t e = static_cast<std::int64_t>((bits >> 52) & 0x7ff) - 1022;
  bits = (bits & 0x000fffffffffffffull) | 0x3fe0000000000000ull;
  double m;
  std::memcpy(&m, &bits, sizeof m);
  if (m < kSqrtHalf) {
    m *= 2.0;
    e -= 1;
  }
  const double t = (m - 1.0) / (m + 1.0);
  const double t2 = t * t;
  double p = kAtanh[9];
  for (int j = 8; j >= 0; --j) p = std::fma(p, t2, kAtanh[j]);
  const double lnm = (2.0 * t) * p;
  const double de = static_cast<double>(e);
  const double lo = std::fma(de, kLn2Lo, lnm);
  return -std::fma(de, kLn2Hi, lo);
}

}  // namespace detail

double inverse_normal_cdf(double u) {
  const double r = u - 0.5;
  const double t = r * r;
  if (t <= 0.180625) {
    const double xi = std::fma(t, detail::kCentralSa, detail::kCentralSb);
    return r * (detail::horner(detail::kCentralP, xi) /
                detail::horner(detail::kCentralQ, xi));
  }
  const double q = r < 0.0 ? u : 1.0 - u;
  const double s = std::sqrt(detail::neg_log(q));
  const double mag = detail::tail_magnitude(s);
  return r < 0.0 ? -mag : mag;
}

GaussianSource::GaussianSource(std::uint64_t seed, const StreamKey& key) {
  if (key.replication >= (1u << 16))
    throw std::invalid_argument("StreamKey: replication must be < 2^16");
  if (key.step == 0)
    throw std::invalid_argument("StreamKey: step must be positive");
  if (key.level == 0 || key.level > 255)
    throw std::invalid_argument("StreamKey: level must be in [1,255]");
  if (key.sample == 0 || key.sample >= (1ull << 40))
    throw std::invalid_argument("StreamKey: sample must be in [1,2^40)");
  const std::uint64_t s = detail::splitmix64(seed);
  key0_ = static_cast<std::uint32_t>(s);
  key1_ = static_cast<std::uint32_t>(s >> 32);
  c1_ = static_cast<std::uint32_t>(key.sample);
  c2_ = static_cast<std::uint32_t>((key.sample >> 32) & 0xff) |
        (static_cast<std::uint32_t>(key.level) << 8) |
        ((key.step & 0xffffu) << 16);
  c3_ = (key.step >> 16) | (key.replication << 16);
}

double GaussianSource::uniform_at(std::uint64_t i) const {
  if (i >= (1ull << 33))
    throw std::invalid_argument("GaussianSource: variate index out of range");
  const auto b = detail::philox4x32(static_cast<std::uint32_t>(i >> 1), c1_,
                                    c2_, c3_, key0_, key1_);
  const std::uint64_t x =
      (i & 1) == 0 ? (static_cast<std::uint64_t>(b.x0) << 32) | b.x1
                   : (static_cast<std::uint64_t>(b.x2) << 32) | b.x3;
  return detail::uniform_from_bits(x);
}

double GaussianSource::at(std::uint64_t i) const {
  return inverse_normal_cdf(uniform_at(i));
}

#ifdef MLSA_AVX512

namespace detail {

namespace {

struct Blocks8 {
  __m512i x0, x1, x2, x3;  // 8 lanes; each u64 lane holds a u32 value
};

inline Blocks8 philox8(__m512i c0, __m512i c1, __m512i c2, __m512i c3,
                       std::uint32_t k0, std::uint32_t k1) {
  const __m512i mask32 = _mm512_set1_epi64(0xffffffffll);
  for (int r = 0; r < 10; ++r) {
    const __m512i p0 = _mm512_mul_epu32(c0, _mm512_set1_epi64(kM0));
    const __m512i p1 = _mm512_mul_epu32(c2, _mm512_set1_epi64(kM1));
    const __m512i h0 = _mm512_srli_epi64(p0, 32);
    const __m512i l0 = _mm512_and_si512(p0, mask32);
    const __m512i h1 = _mm512_srli_epi64(p1, 32);
    const __m512i l1 = _mm512_and_si512(p1, mask32);
    const __m512i kk0 = _mm512_set1_epi64(static_cast<std::uint32_t>(k0 + r * kW0));
    const __m512i kk1 = _mm512_set1_epi64(static_cast<std::uint32_t>(k1 + r * kW1));
    c0 = _mm512_xor_si512(_mm512_xor_si512(h1, c1), kk0);
    c1 = l1;
    c2 = _mm512_xor_si512(_mm512_xor_si512(h0, c3), kk1);
    c3 = l0;
  }
  return {c0, c1, c2, c3};
}

inline __m512d uniform8(__m512i hi, __m512i lo) {
  const __m512i x = _mm512_or_si512(_mm512_slli_epi64(hi, 32), lo);
  const __m512i f =
      _mm512_or_si512(_mm512_slli_epi64(_mm512_srli_epi64(x, 12), 1),
                      _mm512_set1_epi64(1));
  return _mm512_mul_pd(_mm512_cvtepu64_pd(f), _mm512_set1_pd(kTwoPowM53));
}

template <std::size_t N>
inline __m512d horner8(const double (&c)[N], __m512d x) {
  __m512d p = _mm512_set1_pd(c[N - 1]);
  for (std::size_t j = N - 1; j-- > 0;)
    p = _mm512_fmadd_pd(p, x, _mm512_set1_pd(c[j]));
  return p;
}

inline __m512d neg_log8(__m512d q) {
  const __m512i bits = _mm512_castpd_si512(q);
  const __m512i eraw = _mm512_sub_epi64(
      _mm512_and_si512(_mm512_srli_epi64(bits, 52), _mm512_set1_epi64(0x7ff)),
      _mm512_set1_epi64(1022));
  const __m512i mb =
      _mm512_or_si512(_mm512_and_si512(bits, _mm512_set1_epi64(0x000fffffffffffffll)),
                      _mm512_set1_epi64(0x3fe0000000000000ll));
  __m512d m = _mm512_castsi512_pd(mb);
  const __mmask8 lt = _mm512_cmp_pd_mask(m, _mm512_set1_pd(kSqrtHalf), _CMP_LT_OQ);
  m = _mm512_mask_mul_pd(m, lt, m, _mm512_set1_pd(2.0));
  const __m512i e = _mm512_mask_sub_epi64(eraw, lt, eraw, _mm512_set1_epi64(1));
  const __m512d one = _mm512_set1_pd(1.0);
  const __m512d t = _mm512_div_pd(_mm512_sub_pd(m, one), _mm512_add_pd(m, one));
  const __m512d t2 = _mm512_mul_pd(t, t);
  __m512d p = _mm512_set1_pd(kAtanh[9]);
  for (int j = 8; j >= 0; --j)
    p = _mm512_fmadd_pd(p, t2, _mm512_set1_pd(kAtanh[j]));
  const __m512d lnm = _mm512_mul_pd(_mm512_mul_pd(_mm512_set1_pd(2.0), t), p);
  const __m512d de = _mm512_cvtepi64_pd(e);
  const __m512d lo = _mm512_fmadd_pd(de, _mm512_set1_pd(kLn2Lo), lnm);
  const __m512d r = _mm512_fmadd_pd(de, _mm512_set1_pd(kLn2Hi), lo);
  return _mm512_xor_pd(r, _mm512_set1_pd(-0.0));
}

inline __mmask8 central_tail_mask(__m512d u) {
  const __m512d r = _mm512_sub_pd(u, _mm512_set1_pd(0.5));
  return _mm512_cmp_pd_mask(_mm512_mul_pd(r, r), _mm512_set1_pd(0.180625),
                            _CMP_GT_OQ);
}

// central-branch quantile; returns mask of lanes that need the tail path
inline __mmask8 central8(__m512d u, __m512d* z) {
  const __m512d r = _mm512_sub_pd(u, _mm512_set1_pd(0.5));
  const __m512d t = _mm512_mul_pd(r, r);
  const __mmask8 tail =
      _mm512_cmp_pd_mask(t, _mm512_set1_pd(0.180625), _CMP_GT_OQ);
  const __m512d xi =
      _mm512_fmadd_pd(t, _mm512_set1_pd(kCentralSa), _mm512_set1_pd(kCentralSb));
  const __m512d num = horner8(kCentralP, xi);
  const __m512d den = horner8(kCentralQ, xi);
  *z = _mm512_mul_pd(r, _mm512_div_pd(num, den));
  return tail;
}

// tail-branch quantile for 8 already-compacted uniforms
inline __m512d tail8(__m512d u) {
  const __m512d half = _mm512_set1_pd(0.5);
  const __m512d q =
      _mm512_min_pd(u, _mm512_sub_pd(_mm512_set1_pd(1.0), u));
  const __m512d s = _mm512_sqrt_pd(neg_log8(q));
  const __mmask8 deep =
      _mm512_cmp_pd_mask(s, _mm512_set1_pd(3.39), _CMP_GT_OQ);
  const __m512d xi =
      _mm512_fmadd_pd(s, _mm512_set1_pd(kTailASa), _mm512_set1_pd(kTailASb));
  __m512d mag =
      _mm512_div_pd(horner8(kTailAP, xi), horner8(kTailAQ, xi));
  if (deep) {  // q < ~1e-5; essentially never taken
    alignas(64) double sbuf[8], mbuf[8];
    _mm512_store_pd(sbuf, s);
    _mm512_store_pd(mbuf, mag);
    for (int l = 0; l < 8; ++l)
      if (deep & (1 << l)) mbuf[l] = tail_magnitude(sbuf[l]);
    mag = _mm512_load_pd(mbuf);
  }
  const __mmask8 neg = _mm512_cmp_pd_mask(u, half, _CMP_LT_OQ);
  return _mm512_mask_xor_pd(mag, neg, mag, _mm512_set1_pd(-0.0));
}

}  // namespace

bool simd_enabled() { return true; }

// Batch path used by GaussianSource::fill and by problem kernels: converts
// 8 philox blocks into 16 interleaved normals. Tail lanes are deferred to
// a caller-owned buffer and fixed up in batches of 8.
struct TailFixup {
  double u[24];
  std::uint64_t at[24];
  int n = 0;

  void push(__m512d uv, __mmask8 mask, std::uint64_t off) {
    alignas(64) std::uint64_t idx[8] = {0, 1, 2, 3, 4, 5, 6, 7};
    __m512i iv = _mm512_add_epi64(_mm512_load_si512(idx),
                                  _mm512_set1_epi64(static_cast<long long>(off)));
    _mm512_mask_compressstoreu_pd(u + n, mask, uv);
    _mm512_mask_compressstoreu_epi64(at + n, mask, iv);
    n += __builtin_popcount(mask);
  }
  void drain_batches(double* out) {
    while (n >= 8) {
      const __m512d uv = _mm512_loadu_pd(u);
      const __m512d z = tail8(uv);
      alignas(64) double zb[8];
      _mm512_store_pd(zb, z);
      for (int l = 0; l < 8; ++l) out[at[l]] = zb[l];
      n -= 8;
      std::memmove(u, u + 8, sizeof(double) * n);
      std::memmove(at, at + 8, sizeof(std::uint64_t) * n);
    }
  }
  void flush(double* out) {
    drain_batches(out);
    for (int l = 0; l < n; ++l) out[at[l]] = inverse_normal_cdf(u[l]);
    n = 0;
  }
};

}  // namespace detail

namespace detail {

// uniforms for blocks [b0, b0+pairs) in stream order, 16 per 8-block group
void uniforms_avx512(std::uint32_t c1, std::uint32_t c2, std::uint32_t c3,
                     std::uint32_t k0, std::uint32_t k1, std::uint64_t b0,
                     std::size_t pairs, double* ubuf) {
  const __m512i lane = _mm512_set_epi64(7, 6, 5, 4, 3, 2, 1, 0);
  const __m512i vc1 = _mm512_set1_epi64(c1);
  const __m512i vc2 = _mm512_set1_epi64(c2);
  const __m512i vc3 = _mm512_set1_epi64(c3);
  const __m512i idxA = _mm512_set_epi64(11, 3, 10, 2, 9, 1, 8, 0);
  const __m512i idxB = _mm512_set_epi64(15, 7, 14, 6, 13, 5, 12, 4);
  std::size_t g = 0;
  for (; g + 2 <= pairs; g += 2) {  // two blocks in flight for ILP
    const __m512i c0a = _mm512_add_epi64(
        _mm512_set1_epi64(static_cast<long long>(b0 + 8 * g)), lane);
    const __m512i c0b = _mm512_add_epi64(
        _mm512_set1_epi64(static_cast<long long>(b0 + 8 * g + 8)), lane);
    const auto ba = philox8(c0a, vc1, vc2, vc3, k0, k1);
    const auto bb = philox8(c0b, vc1, vc2, vc3, k0, k1);
    const __m512d ua0 = uniform8(ba.x0, ba.x1);
    const __m512d ub0 = uniform8(ba.x2, ba.x3);
    const __m512d ua1 = uniform8(bb.x0, bb.x1);
    const __m512d ub1 = uniform8(bb.x2, bb.x3);
    _mm512_storeu_pd(ubuf + 16 * g, _mm512_permutex2var_pd(ua0, idxA, ub0));
    _mm512_storeu_pd(ubuf + 16 * g + 8, _mm512_permutex2var_pd(ua0, idxB, ub0));
    _mm512_storeu_pd(ubuf + 16 * g + 16, _mm512_permutex2var_pd(ua1, idxA, ub1));
    _mm512_storeu_pd(ubuf + 16 * g + 24, _mm512_permutex2var_pd(ua1, idxB, ub1));
  }
  for (; g < pairs; ++g) {
    const __m512i c0 = _mm512_add_epi64(
        _mm512_set1_epi64(static_cast<long long>(b0 + 8 * g)), lane);
    const auto blk = philox8(c0, vc1, vc2, vc3, k0, k1);
    const __m512d ua = uniform8(blk.x0, blk.x1);
    const __m512d ub = uniform8(blk.x2, blk.x3);
    _mm512_storeu_pd(ubuf + 16 * g, _mm512_permutex2var_pd(ua, idxA, ub));
    _mm512_storeu_pd(ubuf + 16 * g + 8, _mm512_permutex2var_pd(ua, idxB, ub));
  }
}

// in-place quantile transform of a uniform buffer
void normals_from_uniforms_avx512(const double* ubuf, std::size_t n,
                                  double* out) {
  TailFixup fix;
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {  // two vectors in flight for ILP
    const __m512d u0 = _mm512_loadu_pd(ubuf + j);
    const __m512d u1 = _mm512_loadu_pd(ubuf + j + 8);
    __m512d z0, z1;
    const __mmask8 t0 = central8(u0, &z0);
    const __mmask8 t1 = central8(u1, &z1);
    _mm512_storeu_pd(out + j, z0);
    _mm512_storeu_pd(out + j + 8, z1);
    if (t0 | t1) {
      fix.push(u0, t0, j);
      fix.push(u1, t1, j + 8);
      fix.drain_batches(out);
    }
  }
  for (; j + 8 <= n; j += 8) {
    const __m512d u = _mm512_loadu_pd(ubuf + j);
    __m512d z;
    const __mmask8 tail = central8(u, &z);
    _mm512_storeu_pd(out + j, z);
    if (tail) {
      fix.push(u, tail, j);
      fix.drain_batches(out);
    }
  }
  fix.flush(out);
  for (; j < n; ++j) out[j] = inverse_normal_cdf(ubuf[j]);
}

}  // namespace detail

void GaussianSource::fill(std::uint64_t first, std::size_t count,
                          double* out) const {
  if (count == 0) return;
  if (first + count > (1ull << 33))
    throw std::invalid_argument("GaussianSource: variate index out of range");
  std::size_t done = 0;
  if (first & 1) {  // align to an even variate index
    out[0] = at(first);
    ++done;
  }
  constexpr std::size_t kChunk = 2048;  // uniforms buffered per pass
  alignas(64) double ubuf[kChunk];
  std::size_t main = ((count - done) / 16) * 16;
  while (main > 0) {
    const std::size_t c = main < kChunk ? main : kChunk;
    detail::uniforms_avx512(c1_, c2_, c3_, key0_, key1_, (first + done) >> 1,
                            c / 16, ubuf);
    detail::normals_from_uniforms_avx512(ubuf, c, out + done);
    done += c;
    main -= c;
  }
  for (; done < count; ++done) out[done] = at(first + done);
}

#else  // !MLSA_AVX512

namespace detail {
bool simd_enabled() { return false; }
}  // namespace detail

void GaussianSource::fill(std::uint64_t first, std::size_t count,
                          double* out) const {
  for (std::size_t j = 0; j < count; ++j) out[j] = at(first + j);
}

#endif

}  // namespace mlsa::rng
