// Copyright 2026 The iowbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IOWBC_COMMON_HPP_
#define IOWBC_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace iowbc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;

/// Bad or inconsistent user input (config files, CLI, model files).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN, non-finite, or structurally impossible numerics.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Planar conventions: world axes x (forward), z (up). Angles are positive
// when the body tips forward (up-axis rotates toward +x). rot(a) maps
// body coordinates to world, and d/da rot(a)*r == a_dot * perp(rot(a)*r),
// so the velocity of a body-fixed point is v_origin + omega * perp(p - p0).
inline Mat2 rot(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat2 r;
  r << c, s, -s, c;
  return r;
}

inline Vec2 perp(const Vec2& r) { return Vec2(r.y(), -r.x()); }

/// Torque about the origin of force f applied at point p.
inline double moment(const Vec2& p, const Vec2& f) {
  return p.y() * f.x() - p.x() * f.y();
}

inline double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seeded random stream. Independent streams are derived from a base seed
/// plus a stream id so that per-env randomness is stable under any worker
/// count or stepping order.
class RngStream {
 public:
  RngStream() : gen_(0) {}
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed;
    (void)splitmix64(x);
    x ^= 0x6a09e667f3bcc909ull * (stream + 1);
    gen_.seed(splitmix64(x));
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  int uniform_int(int lo, int hi) {  /// inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  std::mt19937_64& gen() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace iowbc

#endif  // IOWBC_COMMON_HPP_
