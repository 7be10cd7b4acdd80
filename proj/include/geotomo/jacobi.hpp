#pragma once

// beta-scaled Jacobi fields b'' + beta kappa(gamma(t)) b = 0, b(0) = 0, b'(0) = 1,
// integrated together with the geodesic, and the conjugate-point tests built on them.

#include <atomic>
#include <cstddef>
#include <utility>
#include <vector>

#include "geotomo/geodesic_flow.hpp"

namespace geotomo {

struct JacobiTrace {
  std::vector<double> b;     // one value per path sample
  std::vector<double> bdot;
  double beta_c = 1.0;
  double b_exit = 0.0;       // values at the refined exit time tau
  double bdot_exit = 0.0;
};

struct ConjugatePoint {
  double t = 0.0;
  Vec2 position;
};

/// Samples closer than this many steps to t = 0 are ignored when looking for zeros of b.
inline constexpr double kJacobiExclusionSteps = 10.0;

namespace detail {

template <MetricModel M>
struct JacobiRhs {
  const M& metric;
  double beta_c;

  State<5> operator()(const State<5>& s, Trig t) const {
    const MetricSample m = metric.sample({s[0], s[1]});
    const double c = t.c;
    const double sn = t.s;
    const double kappa = -m.speed * m.speed * m.lap;
    return {m.speed * c, m.speed * sn, m.speed * (-sn * m.grad.x + c * m.grad.y), s[4], -beta_c * kappa * s[3]};
  }
};

inline void check_beta(double beta_c) {
  if (!(beta_c >= 0.0)) throw UsageError("Jacobi scaling beta must be non-negative");
}

}  // namespace detail

template <MetricModel M>
std::pair<GeodesicPath, JacobiTrace> trace_jacobi(const Manifold<M>& mf, SMPoint start, double beta_c, double dt,
                                                  std::size_t max_steps) {
  detail::check_step(dt);
  detail::check_beta(beta_c);
  GeodesicPath path;
  path.dt = dt;
  JacobiTrace jt;
  jt.beta_c = beta_c;
  auto visit = [&](std::size_t, const detail::State<5>& s) {
    path.samples.push_back({s[0], s[1], wrap_two_pi(s[2])});
    jt.b.push_back(s[3]);
    jt.bdot.push_back(s[4]);
    return true;
  };
  const auto out = detail::march<5>(detail::JacobiRhs<M>{mf.metric, beta_c}, mf.domain,
                                    {start.x, start.y, start.theta, 0.0, 1.0}, dt, max_steps, visit);
  if (!out.exited) throw TrappedGeodesic("Jacobi trace did not exit within max_steps", std::move(path));
  path.exit_point = {out.exit_state[0], out.exit_state[1]};
  path.exit_theta = wrap_two_pi(out.exit_state[2]);
  path.tau = out.tau;
  jt.b_exit = out.exit_state[3];
  jt.bdot_exit = out.exit_state[4];
  return {std::move(path), std::move(jt)};
}

template <MetricModel M>
std::pair<GeodesicPath, JacobiTrace> trace_jacobi(const Manifold<M>& mf, SMPoint start, double beta_c, double dt) {
  return trace_jacobi(mf, start, beta_c, dt, default_max_steps(mf.domain, dt));
}

/// Sign changes of b on (10 dt, tau], located by linear interpolation.
inline std::vector<ConjugatePoint> conjugate_points(const JacobiTrace& jt, const GeodesicPath& path) {
  std::vector<ConjugatePoint> found;
  const std::size_t n = std::min(jt.b.size(), path.samples.size());
  if (n == 0) return found;
  const double dt = path.dt;
  const double t_min = kJacobiExclusionSteps * dt;

  auto time_of = [&](std::size_t i) { return i < n ? static_cast<double>(i) * dt : path.tau; };
  auto value_of = [&](std::size_t i) { return i < n ? jt.b[i] : jt.b_exit; };
  auto point_of = [&](std::size_t i) {
    return i < n ? Vec2{path.samples[i].x, path.samples[i].y} : path.exit_point;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const double ta = time_of(i);
    const double tb = time_of(i + 1);
    const double ba = value_of(i);
    const double bb = value_of(i + 1);
    if (tb <= t_min) continue;
    const bool crosses = (ba > 0.0 && bb <= 0.0) || (ba < 0.0 && bb >= 0.0);
    if (!crosses) continue;
    const double w = ba / (ba - bb);
    const double t = ta + w * (tb - ta);
    if (t <= t_min) continue;
    const Vec2 pa = point_of(i);
    const Vec2 pb = point_of(i + 1);
    found.push_back({t, pa + w * (pb - pa)});
  }
  return found;
}

namespace detail {

enum class RayVerdict { free, conjugate, trapped };

template <MetricModel M>
RayVerdict jacobi_ray_verdict(const Manifold<M>& mf, SMPoint start, double beta_c, double dt,
                              std::size_t max_steps) {
  const double t_min = kJacobiExclusionSteps * dt;
  bool hit = false;
  auto visit = [&](std::size_t p, const State<5>& s) {
    if (static_cast<double>(p) * dt > t_min && s[3] <= 0.0) {
      hit = true;
      return false;
    }
    return true;
  };
  const auto out = march<5>(JacobiRhs<M>{mf.metric, beta_c}, mf.domain, {start.x, start.y, start.theta, 0.0, 1.0},
                            dt, max_steps, visit);
  if (hit) return RayVerdict::conjugate;
  if (!out.exited) return RayVerdict::trapped;
  if (out.tau > t_min && out.exit_state[3] <= 0.0) return RayVerdict::conjugate;
  return RayVerdict::free;
}

}  // namespace detail

/// True iff no geodesic cast from the n_beta x n_alpha influx grid has a zero
/// of b_beta on (t_min, tau]. Conjugate points take precedence over trapping,
/// which keeps the answer independent of scheduling.
template <MetricModel M>
bool is_beta_free(const Manifold<M>& mf, double beta_c, std::size_t n_beta, std::size_t n_alpha, double dt,
                  std::size_t max_steps) {
  detail::check_step(dt);
  detail::check_beta(beta_c);
  if (n_beta < 16 || n_alpha < 16) throw UsageError("is_beta_free needs grids of at least 16 x 16");
  std::atomic<bool> conjugate{false};
  std::atomic<bool> trapped{false};
  parallel_for(n_beta * n_alpha, [&](std::size_t idx) {
    if (conjugate.load(std::memory_order_relaxed)) return;
    const std::size_t i = idx / n_alpha;
    const std::size_t j = idx % n_alpha;
    const InfluxCoord c{kTwoPi * static_cast<double>(i) / static_cast<double>(n_beta),
                        -kHalfPi + kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(n_alpha)};
    switch (detail::jacobi_ray_verdict(mf, influx_start(mf.domain, c), beta_c, dt, max_steps)) {
      case detail::RayVerdict::conjugate:
        conjugate.store(true, std::memory_order_relaxed);
        break;
      case detail::RayVerdict::trapped:
        trapped.store(true, std::memory_order_relaxed);
        break;
      case detail::RayVerdict::free:
        break;
    }
  });
  if (conjugate.load()) return false;
  if (trapped.load()) throw NotApplicable("conjugate-point test presumes a non-trapping manifold");
  return true;
}

template <MetricModel M>
bool is_beta_free(const Manifold<M>& mf, double beta_c, std::size_t n_beta, std::size_t n_alpha, double dt) {
  return is_beta_free(mf, beta_c, n_beta, n_alpha, dt, default_max_steps(mf.domain, dt));
}

struct TerminatorOptions {
  double eps = 1e-3;
  double beta_min = 1e-3;
  double beta_cap = 64.0;
  std::size_t n_beta = 256;
  std::size_t n_alpha = 128;
  double dt = 1e-2;
};

struct TerminatorResult {
  double value = 0.0;
  bool capped = false;  // value is only a lower bound
};

/// Terminator constant by dichotomy on [beta_min, beta_cap].
template <MetricModel M>
TerminatorResult terminator(const Manifold<M>& mf, const TerminatorOptions& opt = {}) {
  if (!(opt.eps > 0.0)) throw UsageError("terminator tolerance must be positive");
  if (!(opt.beta_cap > 1.0)) throw UsageError("terminator cap must exceed 1");
  const std::size_t max_steps = default_max_steps(mf.domain, opt.dt);
  auto is_free = [&](double b) { return is_beta_free(mf, b, opt.n_beta, opt.n_alpha, opt.dt, max_steps); };
  if (is_free(opt.beta_cap)) return {opt.beta_cap, true};
  double lo = opt.beta_min;
  double hi = opt.beta_cap;
  while (hi - lo >= opt.eps) {
    const double mid = 0.5 * (lo + hi);
    if (is_free(mid))
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

}  // namespace geotomo
