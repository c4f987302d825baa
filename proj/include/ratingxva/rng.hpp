#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ratingxva {

/// Fixed labels separating the random streams of the different simulation stages.
/// Changing any value changes every simulated number downstream.
namespace stream_label {
inline constexpr std::uint64_t kMatrixSde = 0x5344452d4d415452ULL;
inline constexpr std::uint64_t kSsa = 0x5353412d50415448ULL;
inline constexpr std::uint64_t kPortfolioDraw = 0x504f52542d445257ULL;
inline constexpr std::uint64_t kPortfolioPath = 0x504f52542d504154ULL;
inline constexpr std::uint64_t kCounterparty = 0x435054592d525447ULL;
}  // namespace stream_label

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream: output n is splitmix64(key + n * golden), where
/// the key is a hash of (seed, labels...). Streams with different label tuples
/// are independent for practical purposes, and the value a stream produces
/// depends only on its key, never on the order in which streams are consumed.
///
/// Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) noexcept {
    std::uint64_t key = detail::splitmix64(seed);
    for (std::uint64_t label : labels) key = detail::splitmix64(key ^ detail::splitmix64(label + 0x632be59bd9b4e019ULL));
    state_ = key;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw from the open interval (0, 1): 53 random bits, offset by half an ulp.
  double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal draw (Box-Muller on two open uniforms; no cached state).
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace ratingxva
