#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <random>

namespace dcfg {

/// Deterministic sampler on top of mt19937_64. The bit-to-double mappings are
/// spelled out here because std::uniform_real_distribution and friends are
/// implementation-defined, which would break byte-stable outputs across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform integer in [0, n). Modulo bias is ~n / 2^64, irrelevant here.
  int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  Eigen::VectorXd normal_vector(int dim, double sigma = 1.0) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = sigma * normal();
    return v;
  }

  Eigen::Vector3d normal3(double sigma = 1.0) {
    return Eigen::Vector3d(sigma * normal(), sigma * normal(), sigma * normal());
  }

  /// Haar-uniform rotation (Shoemake's subgroup algorithm).
  Eigen::Quaterniond haar_quaternion() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double u3 = uniform01();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    return Eigen::Quaterniond(b * std::cos(2.0 * kPi * u3), a * std::sin(2.0 * kPi * u2),
                              a * std::cos(2.0 * kPi * u2), b * std::sin(2.0 * kPi * u3));
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 gen_;
};

}  // namespace dcfg
