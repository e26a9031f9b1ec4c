#pragma once

#include <cstddef>
#include <cstdint>

namespace mlsa::rng {

// Coordinates of one random stream. Distinct keys give statistically
// independent streams; identical keys reproduce the same stream. The
// packing into generator state is injective within the documented
// ranges, so no two keys can ever share state.
struct StreamKey {
  std::uint32_t replication = 0;  // < 2^16
  std::uint32_t step = 1;         // n >= 1
  std::uint32_t level = 1;        // k in [1, 255]
  std::uint64_t sample = 1;       // l in [1, 2^40)
};

// Standard normal quantile, u in (0,1). Rational approximations fitted
// to ~2e-13 relative accuracy; used by GaussianSource so that normal
// variates cost a fixed number of uniforms per draw.
double inverse_normal_cdf(double u);

// Counter-based source of i.i.d. standard normals: variate i is a pure
// function of (seed, key, i). fill() uses a SIMD kernel when available
// and produces bit-identical output to at()/next().
class GaussianSource {
 public:
  GaussianSource(std::uint64_t seed, const StreamKey& key);

  double next() { return at(pos_++); }
  double at(std::uint64_t i) const;
  void fill(std::uint64_t first, std::size_t count, double* out) const;

  // raw uniforms on the grid (2m+1)/2^53, exposed for tests
  double uniform_at(std::uint64_t i) const;

  std::uint32_t key0() const { return key0_; }
  std::uint32_t key1() const { return key1_; }
  std::uint32_t c1() const { return c1_; }
  std::uint32_t c2() const { return c2_; }
  std::uint32_t c3() const { return c3_; }

 private:
  std::uint32_t key0_, key1_;  // philox key derived from the master seed
  std::uint32_t c1_, c2_, c3_; // fixed counter words packed from the key
  std::uint64_t pos_ = 0;
};

inline GaussianSource stream(std::uint64_t seed, const StreamKey& key) {
  return GaussianSource(seed, key);
}

namespace detail {

// Philox4x32-10 block function; exposed for the SIMD kernels and tests.
struct PhiloxBlock {
  std::uint32_t x0, x1, x2, x3;
};
PhiloxBlock philox4x32(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                       std::uint32_t c3, std::uint32_t k0, std::uint32_t k1);

std::uint64_t splitmix64(std::uint64_t x);

// -log on (0, 0.25]; same polynomial in scalar and SIMD form so both
// paths agree bitwise. Used by the quantile tail branch.
double neg_log(double q);

// true if the AVX-512 batch kernels are compiled in and usable
bool simd_enabled();

}  // namespace detail

}  // namespace mlsa::rng
