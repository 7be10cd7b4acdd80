#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "geotomo/geometry.hpp"

namespace geotomo::testing {

/// Uniform points in the disk of radius r about the origin.
inline std::vector<Vec2> disk_points(std::size_t count, double r, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < count; ++i) {
    const double rho = r * std::sqrt(u(rng));
    const double a = kTwoPi * u(rng);
    pts.push_back({rho * std::cos(a), rho * std::sin(a)});
  }
  return pts;
}

inline double angle_gap(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace geotomo::testing
