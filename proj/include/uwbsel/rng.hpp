#pragma once

#include <cstdint>
#include <random>

#include "uwbsel/so3.hpp"

namespace uwbsel {

/// splitmix64 mix, used to derive independent child streams (init / imu /
/// range) from one scenario seed. Keeps the measurement-noise draws of a
/// seed identical across selection policies.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic Gaussian stream: mt19937_64 + Marsaglia polar transform.
/// std::normal_distribution is implementation-defined, so it is not used;
/// the same seed yields bit-identical draws on any platform.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal draw.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double gaussian(double sigma) { return sigma * gaussian(); }

  /// Three independent draws, in x,y,z order (explicitly sequenced).
  Vec3 gaussian3(double sigma) {
    const double x = gaussian(sigma);
    const double y = gaussian(sigma);
    const double z = gaussian(sigma);
    return Vec3(x, y, z);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace uwbsel
