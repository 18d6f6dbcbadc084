#pragma once

#include <cstdint>

namespace sumspec {

// Counter-based random streams built on the splitmix64 finalizer.
//
// Every random decision in the library is a pure function of a 64-bit seed
// plus a handful of stream coordinates (domain tag, layer, pair indices,
// counter). This makes sampling order-independent: the value drawn for
// layer t, pair (i,j) does not depend on how many other pairs were drawn
// before it, so layers and pairs can be generated concurrently or lazily
// with identical results.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Absorb one coordinate into the running key.
inline std::uint64_t absorb(std::uint64_t key, std::uint64_t word) {
  return splitmix64(key ^ (word * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL));
}

}  // namespace detail

// Domain tags keep independent uses of the same seed from colliding.
enum class RngDomain : std::uint64_t {
  membership = 1,
  edge = 2,
  psi = 3,
  kmeans = 4,
  kmedian = 5,
  eigsolve = 6,
  cell = 7,
  power_iter = 8,
};

// Uniform in [0,1) from a 64-bit word (53-bit mantissa).
inline double u64_to_unit(std::uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

// Stateless draw keyed by (seed, domain, a, b, c). Used for the per-pair
// edge indicators and per-vertex draws where the contract is
// "deterministic per (seed, t, i, j)".
inline std::uint64_t keyed_u64(std::uint64_t seed, RngDomain domain,
                               std::uint64_t a = 0, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
  std::uint64_t k = detail::absorb(seed, static_cast<std::uint64_t>(domain));
  k = detail::absorb(k, a);
  k = detail::absorb(k, b);
  k = detail::absorb(k, c);
  return k;
}

inline double keyed_unit(std::uint64_t seed, RngDomain domain,
                         std::uint64_t a = 0, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
  return u64_to_unit(keyed_u64(seed, domain, a, b, c));
}

// Sequential counter-mode stream for consumers that just need a cheap,
// platform-independent generator (restart seeding, start vectors, ...).
class CounterRng {
public:
  CounterRng(std::uint64_t seed, RngDomain domain, std::uint64_t stream = 0)
      : key_(detail::absorb(detail::absorb(seed, static_cast<std::uint64_t>(domain)), stream)) {}

  std::uint64_t next_u64() { return detail::splitmix64(key_ + counter_++ * 0x9e3779b97f4a7c15ULL); }

  double next_unit() { return u64_to_unit(next_u64()); }

  // Uniform index in [0, n). n must be positive.
  std::size_t next_index(std::size_t n) {
    // 53-bit scaling; bias is negligible for the index ranges used here.
    auto idx = static_cast<std::size_t>(next_unit() * static_cast<double>(n));
    return idx >= n ? n - 1 : idx;
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Derive a child seed, e.g. one seed per experiment-grid cell.
inline std::uint64_t derive_seed(std::uint64_t seed, RngDomain domain,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  return keyed_u64(seed, domain, a, b, c);
}

}  // namespace sumspec
