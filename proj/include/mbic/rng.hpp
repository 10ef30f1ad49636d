#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mbic {

// Splittable substreams: a root seed plus a stream id give an independent,
// reproducible generator. Distinct (seed, stream) pairs never share state.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Folds parts into one stream id; order-sensitive.
inline std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x8000000000000001ULL;
  for (std::uint64_t part : parts) h = splitmix64(h ^ splitmix64(part));
  return h;
}

inline std::mt19937_64 make_engine(RngStream s) {
  return std::mt19937_64(splitmix64(splitmix64(s.seed) ^ splitmix64(s.stream + 0xD6E8FEB86659FD93ULL)));
}

// Uniform on [0, 1). 53-bit mantissa, bit-exact across platforms.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1), both endpoints excluded.
inline double uniform_open(std::mt19937_64& eng) {
  return (static_cast<double>(eng() >> 12) + 0.5) * 0x1.0p-52;
}

// Standard normal draws via Box-Muller; the pair is cached so consecutive
// draws cost one (log, sqrt, sincos) per two values. The output sequence is a
// pure function of the stream.
class NormalSampler {
 public:
  explicit NormalSampler(std::mt19937_64& eng) : eng_(&eng) {}

  double operator()() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    const double u1 = (static_cast<double>((*eng_)() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01(*eng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64* eng_;
  double cached_ = 0.0;
  bool have_ = false;
};

inline double rademacher(std::mt19937_64& eng) {
  return (eng() >> 63) ? 1.0 : -1.0;
}

}  // namespace mbic
