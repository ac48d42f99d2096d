#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "symphony/errors.hpp"

namespace symphony {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Seedable random stream. Identical (master_seed, stream_id) pairs reproduce
/// identical draw sequences; distinct stream_ids give independent streams.
/// All distributions are generated from raw mt19937_64 words through our own
/// transforms, so sequences are bit-stable across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed),
        stream_id_(stream_id),
        engine_(detail::splitmix64(detail::splitmix64(master_seed) ^
                                   detail::splitmix64(~stream_id))) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derived stream for per-cell / per-cluster parallel draws.
  RngStream substream(std::uint64_t id) const {
    return RngStream(master_seed_,
                     detail::splitmix64(stream_id_ * 0x9e3779b97f4a7c15ULL + id));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on (0,1), 53-bit resolution, never exactly 0 or 1.
  double uniform() {
    const double u = (engine_() >> 11) * 0x1.0p-53;
    return u == 0.0 ? 0x1.0p-53 : u;
  }

  /// Standard normal via Box-Muller (one value per pair of uniforms).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double exponential() { return -std::log(uniform()); }

  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw DomainError("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  /// Chi-square with real dof k > 0.
  double chi_square(double k) { return 2.0 * gamma(0.5 * k); }

  /// Beta(a, b) via two gammas.
  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace symphony
