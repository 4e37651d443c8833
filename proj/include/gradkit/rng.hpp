#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gradkit {

// All sampling helpers sit on top of std::mt19937_64 and draw raw 64-bit
// words only.  std::uniform_int_distribution and friends are not pinned down
// by the standard, so using them would make runs differ across stdlibs.
class rng {
 public:
  explicit rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, bound) without modulo bias
  std::uint64_t next_below(std::uint64_t bound);

  // uniform in [0, 1)
  double next_double();

  // uniform in [lo, hi)
  double next_double(double lo, double hi);

  bool next_bool(double p_true) { return next_double() < p_true; }

  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[next_below(items.size())];
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[next_below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64, used to derive independent stream seeds from one root seed
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace gradkit
