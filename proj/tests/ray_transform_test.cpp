#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "geotomo/ray_transform.hpp"

using namespace geotomo;

namespace {

const auto kDisk = StarShapedDomain::circle(1.0);

FieldSampler disc_indicator(double rho) {
  return FieldSampler::analytic([rho](Vec2 p) { return norm(p) < rho ? 1.0 : 0.0; }, kDisk);
}

FieldSampler gaussian(Vec2 c, double s, const StarShapedDomain& d = kDisk) {
  return FieldSampler::analytic(
      [c, s](Vec2 p) {
        const Vec2 q = p - c;
        return std::exp(-dot(q, q) / (2.0 * s * s));
      },
      d);
}

}  // namespace

TEST(InfluxGrid, NodeFormulas) {
  const InfluxGrid g{8, 4};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(g.beta(i), kPi / 4.0 * static_cast<double>(i));
  EXPECT_DOUBLE_EQ(g.alpha(0), -3.0 * kPi / 8.0);
  EXPECT_DOUBLE_EQ(g.alpha(1), -kPi / 8.0);
  EXPECT_DOUBLE_EQ(g.alpha(2), kPi / 8.0);
  EXPECT_DOUBLE_EQ(g.alpha(3), 3.0 * kPi / 8.0);
}

TEST(InfluxGrid, BuildFromResolution) {
  const InfluxGrid g = build_influx_grid(300);
  EXPECT_EQ(g.n_beta, 600u);
  EXPECT_EQ(g.n_alpha, 300u);
  EXPECT_EQ(g.size(), 180000u);
  EXPECT_THROW(build_influx_grid(4), UsageError);
}

TEST(InfluxGrid, NoTangentialNodes) {
  for (std::size_t n : {8u, 9u, 50u, 301u}) {
    const InfluxGrid g = build_influx_grid(n);
    for (std::size_t j = 0; j < g.n_alpha; ++j) EXPECT_LT(std::abs(g.alpha(j)), kHalfPi);
    EXPECT_LT(g.beta(g.n_beta - 1), kTwoPi);
  }
}

TEST(ForwardI0, ZeroField) {
  const FanBeamData d = forward_i0(Manifold{ConstantPositive{1.2}, kDisk},
                                   FieldSampler::analytic([](Vec2) { return 0.0; }, kDisk), build_influx_grid(8), 1e-2);
  for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(ForwardI0, CenteredDiscChords) {
  const double dt = 5e-3;
  const Manifold mf{Euclidean{}, kDisk};
  const InfluxGrid g = build_influx_grid(32);
  const FanBeamData d = forward_i0(mf, disc_indicator(0.5), g, dt);
  for (std::size_t i = 0; i < g.n_beta; ++i)
    for (std::size_t j = 0; j < g.n_alpha; ++j) {
      const double s = std::sin(g.alpha(j));
      const double chord = 2.0 * std::sqrt(std::max(0.0, 0.25 - s * s));
      EXPECT_NEAR(d.at(i, j), chord, 3.0 * dt);
    }
}

TEST(ForwardI0, DiameterAndGrazingRays) {
  const double dt = 5e-3;
  const Manifold mf{Euclidean{}, kDisk};
  const auto run = [&](double alpha) {
    const FieldSampler f = disc_indicator(0.5);
    const GeodesicPath p = trace_from_influx(mf, {kPi, alpha}, dt);
    double sum = 0.0;
    for (const SMPoint& s : p.samples) sum += f({s.x, s.y});
    return dt * sum;
  };
  EXPECT_NEAR(run(0.0), 1.0, 3.0 * dt);
  EXPECT_NEAR(run(kPi / 6.0), 0.0, 3.0 * dt);
}

TEST(ForwardI0, Linearity) {
  const Manifold mf{Lens{0.6, 0.25, {0.2, 0.0}}, kDisk};
  const InfluxGrid g = build_influx_grid(12);
  const FieldSampler f1 = gaussian({0.1, 0.2}, 0.2);
  const FieldSampler f2 = gaussian({-0.3, -0.1}, 0.1);
  const FieldSampler mix = FieldSampler::analytic([&](Vec2 p) { return 2.5 * f1(p) - 0.7 * f2(p); }, kDisk);
  const FanBeamData a = forward_i0(mf, f1, g, 1e-2);
  const FanBeamData b = forward_i0(mf, f2, g, 1e-2);
  const FanBeamData c = forward_i0(mf, mix, g, 1e-2);
  for (std::size_t k = 0; k < c.values.size(); ++k) EXPECT_NEAR(c.values[k], 2.5 * a.values[k] - 0.7 * b.values[k], 1e-12);
}

TEST(ForwardI0, SupportOfField) {
  // A disc of radius 0.2 about (0.5, 0): straight rays from beta = pi with
  // |sin alpha| > 0.7 stay at distance > 0.2 from it.
  const Manifold mf{Euclidean{}, kDisk};
  const FieldSampler f = FieldSampler::analytic([](Vec2 p) { return norm(p - Vec2{0.5, 0.0}) < 0.2 ? 1.0 : 0.0; }, kDisk);
  for (double a : {-1.5, -1.2, -0.9, 0.9, 1.2, 1.5}) {
    const GeodesicPath p = trace_from_influx(mf, {kPi, a}, 1e-2);
    double sum = 0.0;
    for (const SMPoint& s : p.samples) sum += f({s.x, s.y});
    EXPECT_LE(std::abs(1e-2 * sum), 1e-12);
  }
  const InfluxGrid g{16, 16};
  const FanBeamData d = forward_i0(mf, f, g, 1e-2);
  for (std::size_t i = 0; i < g.n_beta; ++i)
    for (std::size_t j = 0; j < g.n_alpha; ++j) {
      // Line distance from (0.5, 0) is |p x v| for the straight ray.
      const SMPoint s = influx_start(kDisk, g.node(i, j));
      const double dist = std::abs((0.5 - s.x) * std::sin(s.theta) - (0.0 - s.y) * std::cos(s.theta));
      if (dist > 0.2 + 1e-9) EXPECT_LE(std::abs(d.at(i, j)), 1e-12);
    }
}

TEST(ForwardI0, QuadratureErrorIsFirstOrder) {
  // Left sums with a truncated final step: |error| <= dt (max|f| + tau max|grad f| / 2).
  const Manifold mf{ConstantNegative{2.0}, kDisk};
  const FieldSampler f = gaussian({0.2, -0.1}, 0.3);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> beta(0.0, kTwoPi);
  std::uniform_real_distribution<double> alpha(-1.3, 1.3);
  for (int q = 0; q < 20; ++q) {
    const InfluxCoord c{beta(rng), alpha(rng)};
    auto integral = [&](double dt) {
      const GeodesicPath p = trace_from_influx(mf, c, dt);
      double sum = 0.0;
      for (const SMPoint& s : p.samples) sum += f({s.x, s.y});
      return dt * sum;
    };
    const double ref = integral(1e-5);
    for (double dt : {2e-2, 1e-2, 5e-3}) EXPECT_LE(std::abs(integral(dt) - ref), 4.0 * dt) << "dt " << dt;
  }
}

TEST(ForwardI0, TrappedRayReportsNode) {
  const Manifold mf{Euclidean{}, kDisk};
  try {
    forward_i0(mf, disc_indicator(0.5), InfluxGrid{4, 4}, 1e-2, 10);
    FAIL();
  } catch (const TrappedGeodesic& e) {
    ASSERT_TRUE(e.coord().has_value());
    EXPECT_EQ(e.coord()->beta, 0.0);
    EXPECT_DOUBLE_EQ(e.coord()->alpha, -3.0 * kPi / 8.0);
  }
}

TEST(ForwardI1, ZeroField) {
  const FanBeamData d = forward_i1_xperp(Manifold{Euclidean{}, kDisk},
                                         FieldSampler::analytic([](Vec2) { return 0.0; }, kDisk), InfluxGrid{8, 8}, 1e-2);
  for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(ForwardI1, SymmetryAxisVanishes) {
  const FanBeamData d =
      forward_i1_xperp(Manifold{Euclidean{}, kDisk}, gaussian({0.0, 0.0}, 0.2), InfluxGrid{2, 1}, 1e-3);
  // Node (beta = pi, alpha = 0) is the second beta of a 2 x 1 grid.
  EXPECT_NEAR(d.at(1, 0), 0.0, 1e-6);
  EXPECT_NEAR(d.at(0, 0), 0.0, 1e-6);
}

TEST(ForwardI1, MatchesDenseLineIntegral) {
  const Vec2 c{0.2, 0.1};
  const double s = 0.2;
  const double dt = 1e-2;
  const Manifold mf{Euclidean{}, kDisk};
  const FieldSampler h = gaussian(c, s);
  auto grad = [&](Vec2 p) {
    const Vec2 q = p - c;
    const double v = std::exp(-dot(q, q) / (2.0 * s * s));
    return Vec2{-q.x / (s * s) * v, -q.y / (s * s) * v};
  };
  const InfluxCoord node{kPi, 0.2};
  double quad = 0.0;
  {
    const GeodesicPath p = trace_from_influx(mf, node, dt);
    for (const SMPoint& q : p.samples) {
      const double ox = dt * std::sin(q.theta);
      const double oy = dt * std::cos(q.theta);
      quad += (h({q.x + ox, q.y - oy}) - h({q.x - ox, q.y + oy})) / (2.0 * dt);
    }
    quad *= dt;
  }
  // X_perp h = -theta_perp . grad h with theta_perp = (-sin, cos).
  const GeodesicPath fine = trace_from_influx(mf, node, dt / 50.0);
  double dense = 0.0;
  for (std::size_t k = 0; k < fine.samples.size(); ++k) {
    const SMPoint& q = fine.samples[k];
    const Vec2 g = grad({q.x, q.y});
    const double v = std::sin(q.theta) * g.x - std::cos(q.theta) * g.y;
    dense += (k == 0 ? 0.5 : 1.0) * v;
  }
  dense *= dt / 50.0;
  EXPECT_NEAR(quad, dense, 5.0 * dt);
  EXPECT_GT(std::abs(dense), 0.05);
}

TEST(ForwardI1, LibraryMatchesHandQuadrature) {
  const Manifold mf{ConstantPositive{1.2}, kDisk};
  const FieldSampler h = gaussian({0.2, 0.1}, 0.2);
  const double dt = 1e-2;
  const InfluxGrid g{8, 6};
  const FanBeamData lib = forward_i1_xperp(mf, h, g, dt);
  for (std::size_t i = 0; i < g.n_beta; ++i)
    for (std::size_t j = 0; j < g.n_alpha; ++j) {
      const GeodesicPath p = trace_from_influx(mf, g.node(i, j), dt);
      double sum = 0.0;
      for (const SMPoint& q : p.samples) {
        const double ox = dt * std::sin(q.theta);
        const double oy = dt * std::cos(q.theta);
        const double c = mf.metric.flow({q.x, q.y}).speed;
        sum += c * (h({q.x + ox, q.y - oy}) - h({q.x - ox, q.y + oy})) / (2.0 * dt);
      }
      EXPECT_NEAR(lib.at(i, j), dt * sum, 1e-12);
    }
}

TEST(ForwardI1, PotentialFieldAnnihilation) {
  // theta . grad(phi) integrates to phi(exit) - phi(entry) = 0 for compact support.
  const Manifold mf{Euclidean{}, kDisk};
  const Vec2 c{-0.1, 0.25};
  const double s = 0.12;
  auto grad = [&](Vec2 p) {
    const Vec2 q = p - c;
    const double v = std::exp(-dot(q, q) / (2.0 * s * s));
    return Vec2{-q.x / (s * s) * v, -q.y / (s * s) * v};
  };
  for (double a : {-0.8, -0.2, 0.0, 0.35, 1.0}) {
    const double dt = 1e-4;
    const GeodesicPath p = trace_from_influx(mf, {2.5, a}, dt);
    double sum = 0.0;
    for (std::size_t k = 0; k < p.samples.size(); ++k) {
      const SMPoint& q = p.samples[k];
      const Vec2 g = grad({q.x, q.y});
      sum += (k == 0 ? 0.5 : 1.0) * (std::cos(q.theta) * g.x + std::sin(q.theta) * g.y);
    }
    EXPECT_LE(std::abs(dt * sum), 1e-6) << a;
  }
}

TEST(RelL2, FanBeam) {
  FanBeamData a(InfluxGrid{2, 2});
  FanBeamData b(InfluxGrid{2, 2});
  EXPECT_THROW(rel_l2(a, b), UndefinedNorm);
  b.values = {1.0, 2.0, 3.0, 4.0};
  a.values = {1.1, 2.2, 3.3, 4.4};
  EXPECT_NEAR(rel_l2(a, b), 0.1, 1e-12);
  EXPECT_THROW(rel_l2(FanBeamData(InfluxGrid{4, 1}), b), UsageError);
}
