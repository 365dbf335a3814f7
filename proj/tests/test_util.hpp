#ifndef WSA_TEST_UTIL_HPP
#define WSA_TEST_UTIL_HPP

#include <vector>

#include "wsa/rng.hpp"
#include "wsa/tensor.hpp"

namespace wsa::test {

inline Tensor rand_tensor(Shape4 s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  SplitMix64 rng(seed);
  return random_tensor(s, rng, lo, hi);
}

inline std::vector<double> rand_vec(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                    double hi = 1.0) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_uniform(lo, hi);
  return v;
}

}  // namespace wsa::test

#endif  // WSA_TEST_UTIL_HPP
