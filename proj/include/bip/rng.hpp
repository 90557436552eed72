#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace bip {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Hash an ordered tuple of integers into a 64-bit stream key.
constexpr std::uint64_t derive_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = detail::mix64(seed + detail::kGolden);
  for (std::uint64_t v : path) h = detail::mix64(h ^ detail::mix64(v + detail::kGolden));
  return h;
}

/// SplitMix64 generator addressed by a key. Every (sweep, step, block,
/// feature) gets its own stream, so draws do not depend on the order in
/// which features are visited or on the number of threads.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(*this); }

  /// Gamma with shape/rate parameterization.
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0)(*this) / rate;
  }

  /// Inverse gamma with shape/rate (scale of the reciprocal gamma).
  double inverse_gamma(double shape, double rate) {
    return rate / std::gamma_distribution<double>(shape, 1.0)(*this);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  double beta(double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(*this);
    const double y = std::gamma_distribution<double>(b, 1.0)(*this);
    return x / (x + y);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

/// Inverse Gaussian draw with mean `mu` and shape `shape` (variance mu^3/shape),
/// by the chi-square transformation with a uniform choice between the two roots.
double sample_inverse_gaussian(double mu, double shape, Stream& rng);

}  // namespace bip
