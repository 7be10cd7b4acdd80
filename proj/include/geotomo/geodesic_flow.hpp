#pragma once

// Geodesic flow on the unit circle bundle in isothermal coordinates:
//   x' = e^{-lambda} cos(theta), y' = e^{-lambda} sin(theta),
//   theta' = e^{-lambda} (-sin(theta) d1 lambda + cos(theta) d2 lambda),
// integrated with classical RK4 until the first exit from the domain.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "geotomo/core.hpp"
#include "geotomo/geometry.hpp"

namespace geotomo {

struct SMPoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct InfluxCoord {
  double beta = 0.0;   // boundary parameter in [0, 2pi)
  double alpha = 0.0;  // incidence angle from the inner normal, in (-pi/2, pi/2)
};

struct GeodesicPath {
  std::vector<SMPoint> samples;  // uniform spacing dt; all inside the domain
  double dt = 0.0;
  Vec2 exit_point;
  double exit_theta = 0.0;
  double tau = 0.0;  // refined first exit time
};

class TrappedGeodesic : public Error {
 public:
  TrappedGeodesic(std::string what, GeodesicPath partial, std::optional<InfluxCoord> coord = std::nullopt)
      : Error(std::move(what)), partial_(std::move(partial)), coord_(coord) {}
  const char* tag() const noexcept override { return "trapped-geodesic"; }
  const GeodesicPath& partial_path() const { return partial_; }
  const std::optional<InfluxCoord>& coord() const { return coord_; }

 private:
  GeodesicPath partial_;
  std::optional<InfluxCoord> coord_;
};

enum class Direction { forward, backward };

/// Step budget ceil(8 r_max / dt); a geodesic still inside after it is treated as trapped.
inline std::size_t default_max_steps(const StarShapedDomain& d, double dt) {
  return static_cast<std::size_t>(std::ceil(8.0 * d.r_max() / dt));
}

namespace detail {

template <std::size_t N>
using State = std::array<double, N>;

/// cos and sin of the direction angle at an RK4 stage.
struct Trig {
  double c = 1.0;
  double s = 0.0;
};

inline Trig trig_of(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// cos/sin of theta + delta from those of theta. Stage increments are small,
/// and the truncated Taylor series below are exact to rounding in their range.
inline Trig rotate(Trig base, double delta) {
  const double d2 = delta * delta;
  double cd;
  double sd;
  if (std::abs(delta) <= 0.01) {
    cd = 1.0 - d2 / 2.0 * (1.0 - d2 / 12.0 * (1.0 - d2 / 30.0));
    sd = delta * (1.0 - d2 / 6.0 * (1.0 - d2 / 20.0));
  } else if (std::abs(delta) <= 0.1) {
    cd = 1.0 - d2 / 2.0 * (1.0 - d2 / 12.0 * (1.0 - d2 / 30.0 * (1.0 - d2 / 56.0)));
    sd = delta * (1.0 - d2 / 6.0 * (1.0 - d2 / 20.0 * (1.0 - d2 / 42.0 * (1.0 - d2 / 72.0))));
  } else {
    cd = std::cos(delta);
    sd = std::sin(delta);
  }
  return {base.c * cd - base.s * sd, base.s * cd + base.c * sd};
}

template <MetricModel M>
struct GeodesicRhs {
  const M& metric;

  State<3> operator()(const State<3>& s, Trig t) const {
    const FlowSample f = metric.flow({s[0], s[1]});
    return {f.speed * t.c, f.speed * t.s, f.speed * (-t.s * f.grad.x + t.c * f.grad.y)};
  }
};

/// Classical RK4 on a state whose third component is the direction angle.
/// `base` holds cos/sin of s[2].
template <std::size_t N, class Rhs>
State<N> rk4_step(const Rhs& rhs, const State<N>& s, Trig base, double h) {
  auto axpy = [&s](double w, const State<N>& k) {
    State<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = s[i] + w * k[i];
    return out;
  };
  const State<N> k1 = rhs(s, base);
  const State<N> k2 = rhs(axpy(0.5 * h, k1), rotate(base, 0.5 * h * k1[2]));
  const State<N> k3 = rhs(axpy(0.5 * h, k2), rotate(base, 0.5 * h * k2[2]));
  const State<N> k4 = rhs(axpy(h, k3), rotate(base, h * k3[2]));
  State<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <std::size_t N>
struct MarchOutcome {
  bool exited = false;
  bool stopped = false;    // visitor asked to stop
  std::size_t samples = 0; // inside samples visited, including the start
  State<N> last_inside{};
  State<N> exit_state{};
  double tau = 0.0;
};

inline constexpr int kExitBisections = 20;

/// Marches from `start` with step dt. visit(index, state) sees every inside
/// sample (index 0 is the start) and returns false to stop early. The first
/// outside sample triggers bisection on the boundary gap, one RK4 substep per
/// evaluation from the last inside sample.
template <std::size_t N, class Rhs, class Visitor>
MarchOutcome<N> march(const Rhs& rhs, const StarShapedDomain& domain, State<N> start, double dt,
                      std::size_t max_steps, Visitor&& visit) {
  MarchOutcome<N> out;
  State<N> s = start;
  std::size_t steps = 0;
  for (;;) {
    if (!visit(steps, s)) {
      out.stopped = true;
      out.samples = steps + 1;
      out.last_inside = s;
      return out;
    }
    if (steps >= max_steps) {
      out.samples = steps + 1;
      out.last_inside = s;
      return out;
    }
    const Trig base = trig_of(s[2]);
    const State<N> next = rk4_step(rhs, s, base, dt);
    if (!domain.contains({next[0], next[1]})) {
      double lo = 0.0;
      double hi = dt;
      for (int it = 0; it < kExitBisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        const State<N> trial = rk4_step(rhs, s, base, mid);
        if (domain.gap({trial[0], trial[1]}) > 0.0)
          hi = mid;
        else
          lo = mid;
      }
      const double h = 0.5 * (lo + hi);
      out.exited = true;
      out.samples = steps + 1;
      out.last_inside = s;
      out.exit_state = rk4_step(rhs, s, base, h);
      out.tau = static_cast<double>(steps) * dt + h;
      return out;
    }
    s = next;
    ++steps;
  }
}

inline void check_step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("time step dt must be positive");
}

template <MetricModel M>
GeodesicPath trace_collect(const Manifold<M>& mf, SMPoint start, double dt, std::size_t max_steps,
                           std::optional<InfluxCoord> coord) {
  check_step(dt);
  GeodesicPath path;
  path.dt = dt;
  auto visit = [&path](std::size_t, const State<3>& s) {
    path.samples.push_back({s[0], s[1], wrap_two_pi(s[2])});
    return true;
  };
  const auto out = march<3>(GeodesicRhs<M>{mf.metric}, mf.domain, {start.x, start.y, start.theta}, dt,
                            max_steps, visit);
  if (!out.exited) {
    path.tau = static_cast<double>(out.samples - 1) * dt;
    throw TrappedGeodesic("geodesic did not exit within max_steps", std::move(path), coord);
  }
  path.exit_point = {out.exit_state[0], out.exit_state[1]};
  path.exit_theta = wrap_two_pi(out.exit_state[2]);
  path.tau = out.tau;
  return path;
}

}  // namespace detail

/// Initial point on SM for the influx coordinate (beta, alpha).
inline SMPoint influx_start(const StarShapedDomain& d, InfluxCoord c) {
  const BoundaryPoint bp = boundary_point_and_normal(d, c.beta);
  return {bp.p.x, bp.p.y, bp.nu + c.alpha};
}

template <MetricModel M>
GeodesicPath trace_from_influx(const Manifold<M>& mf, InfluxCoord c, double dt, std::size_t max_steps) {
  return detail::trace_collect(mf, influx_start(mf.domain, c), dt, max_steps, c);
}

template <MetricModel M>
GeodesicPath trace_from_influx(const Manifold<M>& mf, InfluxCoord c, double dt) {
  return trace_from_influx(mf, c, dt, default_max_steps(mf.domain, dt));
}

/// Backward mode flips the direction and traces (x, y, theta + pi) forward.
template <MetricModel M>
GeodesicPath trace_from_interior(const Manifold<M>& mf, SMPoint start, Direction dir, double dt,
                                 std::size_t max_steps) {
  if (!mf.domain.contains({start.x, start.y})) throw UsageError("interior trace must start inside the domain");
  if (dir == Direction::backward) start.theta += kPi;
  return detail::trace_collect(mf, start, dt, max_steps, std::nullopt);
}

template <MetricModel M>
GeodesicPath trace_from_interior(const Manifold<M>& mf, SMPoint start, Direction dir, double dt) {
  return trace_from_interior(mf, start, dir, dt, default_max_steps(mf.domain, dt));
}

namespace detail {

inline constexpr double kAlphaBand = 1e-9;
inline constexpr double kAlphaSlack = 1e-3;

/// Basepoint without storing samples; returns nullopt when trapped.
template <MetricModel M>
std::optional<InfluxCoord> basepoint_or_trapped(const Manifold<M>& mf, Vec2 x, double theta, double dt,
                                                std::size_t max_steps) {
  const auto out = march<3>(GeodesicRhs<M>{mf.metric}, mf.domain, {x.x, x.y, theta + kPi}, dt, max_steps,
                            [](std::size_t, const State<3>&) { return true; });
  if (!out.exited) return std::nullopt;
  const double beta = wrap_two_pi(std::atan2(out.exit_state[1], out.exit_state[0]));
  const double nu = boundary_point_and_normal(mf.domain, beta).nu;
  double alpha = wrap_pi(out.exit_state[2] + kPi - nu);
  if (std::abs(alpha) >= kHalfPi + kAlphaSlack)
    throw GeometryInconsistency("basepoint incidence angle " + std::to_string(alpha) + " outside (-pi/2, pi/2)");
  alpha = std::clamp(alpha, -kHalfPi + kAlphaBand, kHalfPi - kAlphaBand);
  return InfluxCoord{beta, alpha};
}

}  // namespace detail

/// Influx coordinate of the geodesic through (x, theta), found by tracing backwards.
template <MetricModel M>
InfluxCoord basepoint(const Manifold<M>& mf, Vec2 x, double theta, double dt, std::size_t max_steps) {
  detail::check_step(dt);
  if (!mf.domain.contains(x)) throw UsageError("basepoint needs a point inside the domain");
  const auto c = detail::basepoint_or_trapped(mf, x, theta, dt, max_steps);
  if (!c) {
    // Re-trace with sample collection so the error carries the partial path.
    (void)trace_from_interior(mf, {x.x, x.y, theta}, Direction::backward, dt, max_steps);
    throw TrappedGeodesic("backward geodesic did not exit", {});
  }
  return *c;
}

template <MetricModel M>
InfluxCoord basepoint(const Manifold<M>& mf, Vec2 x, double theta, double dt) {
  return basepoint(mf, x, theta, dt, default_max_steps(mf.domain, dt));
}

}  // namespace geotomo
