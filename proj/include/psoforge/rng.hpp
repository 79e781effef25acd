#pragma once

#include "psoforge/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace psoforge {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Named-stream seed splitter: one root seed fans out into independent
/// substreams keyed by (stream name, index). Collisions between streams
/// of different names or indices are as unlikely as splitmix64 allows.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::uint64_t state = root ^ h;
  (void)splitmix64(state);
  state ^= index * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL;
  return splitmix64(state);
}

/// mt19937_64 engine with hand-rolled transforms. The engine's sequence is
/// pinned by the standard; std::normal_distribution is not, so normals come
/// from Box-Muller to keep outputs identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in (0, 1]; never returns 0 so log() is always safe.
  double uniform() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Vector normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Inverse-CDF draw from a simplex weight vector.
  int categorical(const Vector& weights) {
    const double u = uniform();
    double acc = 0.0;
    for (int k = 0; k < weights.size(); ++k) {
      acc += weights[k];
      if (u <= acc) return k;
    }
    return static_cast<int>(weights.size()) - 1;
  }

  /// Fisher-Yates shuffle, deterministic in the engine state.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(eng_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace psoforge
