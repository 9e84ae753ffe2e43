// Counter-based random streams keyed by (seed, individual, age, purpose), so
// draws do not depend on thread scheduling.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace retire {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Labeled sub-seed derivation, e.g. derive_seed(seed, "population").
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) h = (h ^ c) * 1099511628211ULL;
  return hash_combine(seed, h);
}

class Stream {
 public:
  using result_type = std::uint64_t;
  Stream(std::uint64_t seed, std::uint64_t id, std::uint64_t age, std::uint64_t purpose)
      : key_(hash_combine(hash_combine(hash_combine(seed, id), age), purpose)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * (++ctr_)); }

  // uniform on (0,1)
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }
  double normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  double gumbel(double scale) { return -scale * std::log(-std::log(uniform())); }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace retire
