#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace privcon {

/// Seeded Gaussian source: std::mt19937_64, 53-bit uniforms, basic Box-Muller.
///
/// std::normal_distribution is implementation-defined, so the transform is
/// spelled out here. Draws come in pairs; the cosine branch is returned first
/// and the sine branch is cached for the next call.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next(double sigma) { return sigma * standard(); }

  double standard() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] keeps log() finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace privcon
