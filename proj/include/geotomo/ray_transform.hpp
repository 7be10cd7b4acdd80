#pragma once

// Fan-beam discretization of the influx boundary and the forward transforms
// I0 f and I1[X_perp h] by rectangle-rule quadrature along traced geodesics.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "geotomo/fields.hpp"
#include "geotomo/geodesic_flow.hpp"

namespace geotomo {

/// beta_i = 2 pi i / n_beta, alpha_j = -pi/2 + pi (j + 1/2) / n_alpha.
struct InfluxGrid {
  std::size_t n_beta = 0;
  std::size_t n_alpha = 0;

  double beta(std::size_t i) const { return kTwoPi * static_cast<double>(i) / static_cast<double>(n_beta); }
  double alpha(std::size_t j) const {
    return -kHalfPi + kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(n_alpha);
  }
  double beta_step() const { return kTwoPi / static_cast<double>(n_beta); }
  double alpha_step() const { return kPi / static_cast<double>(n_alpha); }
  std::size_t size() const { return n_beta * n_alpha; }
  InfluxCoord node(std::size_t i, std::size_t j) const { return {beta(i), alpha(j)}; }
  friend bool operator==(const InfluxGrid&, const InfluxGrid&) = default;
};

/// 2n x n influx grid for a reconstruction grid of side n.
inline InfluxGrid build_influx_grid(std::size_t n) {
  if (n < 8) throw UsageError("influx grid needs n >= 8");
  return {2 * n, n};
}

/// Values on the influx grid, beta outer: index i * n_alpha + j.
struct FanBeamData {
  InfluxGrid grid;
  std::vector<double> values;

  explicit FanBeamData(InfluxGrid g) : grid(g), values(g.size(), 0.0) {}
  double& at(std::size_t i, std::size_t j) { return values[i * grid.n_alpha + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * grid.n_alpha + j]; }
};

/// ||a - b|| / ||b|| over all influx nodes.
inline double rel_l2(const FanBeamData& a, const FanBeamData& b) {
  if (!(a.grid == b.grid)) throw UsageError("rel_l2 needs fan-beam data on the same grid");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double d = a.values[k] - b.values[k];
    num += d * d;
    den += b.values[k] * b.values[k];
  }
  if (den == 0.0) throw UndefinedNorm("relative error against zero data");
  return std::sqrt(num / den);
}

namespace detail {

template <MetricModel M, class Integrand>
FanBeamData forward_quadrature(const Manifold<M>& mf, const InfluxGrid& g, double dt, std::size_t max_steps,
                               Integrand&& integrand) {
  check_step(dt);
  FanBeamData out(g);
  parallel_for(g.size(), [&](std::size_t idx) {
    const std::size_t i = idx / g.n_alpha;
    const std::size_t j = idx % g.n_alpha;
    const InfluxCoord c = g.node(i, j);
    const SMPoint start = influx_start(mf.domain, c);
    double sum = 0.0;
    const auto res = march<3>(GeodesicRhs<M>{mf.metric}, mf.domain, {start.x, start.y, start.theta}, dt, max_steps,
                              [&](std::size_t, const State<3>& s) {
      sum += integrand(s);
      return true;
    });
    if (!res.exited)
      throw TrappedGeodesic("trapped ray at beta=" + std::to_string(c.beta) + " alpha=" + std::to_string(c.alpha),
                            {}, c);
    out.values[idx] = dt * sum;
  });
  return out;
}

}  // namespace detail

/// I0 f(beta, alpha) ~ dt * sum_p f(x^p, y^p).
template <MetricModel M>
FanBeamData forward_i0(const Manifold<M>& mf, const FieldSampler& f, const InfluxGrid& g, double dt,
                       std::size_t max_steps) {
  return detail::forward_quadrature(mf, g, dt, max_steps,
                                    [&f](const detail::State<3>& s) { return f({s[0], s[1]}); });
}

template <MetricModel M>
FanBeamData forward_i0(const Manifold<M>& mf, const FieldSampler& f, const InfluxGrid& g, double dt) {
  return forward_i0(mf, f, g, dt, default_max_steps(mf.domain, dt));
}

/// I1[X_perp h] ~ dt * sum_p e^{-lambda} (h(p+) - h(p-)) / (2 dt), with the
/// Cartesian offsets p+- = (x +- dt sin(theta), y -+ dt cos(theta)).
template <MetricModel M>
FanBeamData forward_i1_xperp(const Manifold<M>& mf, const FieldSampler& h, const InfluxGrid& g, double dt,
                             std::size_t max_steps) {
  return detail::forward_quadrature(mf, g, dt, max_steps, [&](const detail::State<3>& s) {
    const double ox = dt * std::sin(s[2]);
    const double oy = dt * std::cos(s[2]);
    const double hp = h({s[0] + ox, s[1] - oy});
    const double hm = h({s[0] - ox, s[1] + oy});
    return mf.metric.flow({s[0], s[1]}).speed * (hp - hm) / (2.0 * dt);
  });
}

template <MetricModel M>
FanBeamData forward_i1_xperp(const Manifold<M>& mf, const FieldSampler& h, const InfluxGrid& g, double dt) {
  return forward_i1_xperp(mf, h, g, dt, default_max_steps(mf.domain, dt));
}

}  // namespace geotomo
