#pragma once

// Isotropic metrics g = exp(2 lambda) with hand-differentiated derivatives,
// star-shaped domains and the Herglotz non-trapping test.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <utility>
#include <variant>

#include "geotomo/core.hpp"

namespace geotomo {

/// Everything the flow and Jacobi systems need at one point.
struct MetricSample {
  double lambda = 0.0;
  double speed = 1.0;  // exp(-lambda)
  Vec2 grad;           // (d1 lambda, d2 lambda)
  double lap = 0.0;    // Euclidean Laplacian of lambda
};

/// Reduced sample for the geodesic right-hand side.
struct FlowSample {
  double speed = 1.0;
  Vec2 grad;
};

template <class M>
concept MetricModel = requires(const M& m, Vec2 p) {
  { m.sample(p) } -> std::same_as<MetricSample>;
  { m.flow(p) } -> std::same_as<FlowSample>;
  { m.is_radial() } -> std::convertible_to<bool>;
};

struct Euclidean {
  MetricSample sample(Vec2) const { return {}; }
  FlowSample flow(Vec2) const { return {}; }
  bool is_radial() const { return true; }
};

/// Stereographic pullback of the round sphere of radius R: kappa = 1/R^2.
struct ConstantPositive {
  double R = 1.0;

  FlowSample flow(Vec2 p) const {
    const double s = dot(p, p) + R * R;
    return {s / (2.0 * R * R), {-2.0 * p.x / s, -2.0 * p.y / s}};
  }
  MetricSample sample(Vec2 p) const {
    const double s = dot(p, p) + R * R;
    const double speed = s / (2.0 * R * R);
    return {-std::log(speed), speed, {-2.0 * p.x / s, -2.0 * p.y / s}, -4.0 * R * R / (s * s)};
  }
  bool is_radial() const { return true; }
};

/// Poincare-type disk of radius R: kappa = -1/R^2, singular on |x| = R.
struct ConstantNegative {
  double R = 1.0;

  double gap(Vec2 p) const {
    const double q = R * R - dot(p, p);
    if (!(q > 0.0)) throw DomainError("const_neg metric evaluated on or beyond |x| = R");
    return q;
  }
  FlowSample flow(Vec2 p) const {
    const double q = gap(p);
    return {q / (2.0 * R * R), {2.0 * p.x / q, 2.0 * p.y / q}};
  }
  MetricSample sample(Vec2 p) const {
    const double q = gap(p);
    const double speed = q / (2.0 * R * R);
    return {-std::log(speed), speed, {2.0 * p.x / q, 2.0 * p.y / q}, 4.0 * R * R / (q * q)};
  }
  bool is_radial() const { return true; }
};

/// Gaussian focusing lens: lambda = (k/2) exp(-|x - c|^2 / (2 sigma^2)).
struct Lens {
  double k = 0.0;
  double sigma = 0.25;
  Vec2 center;

  FlowSample flow(Vec2 p) const {
    const Vec2 d = p - center;
    const double s2 = sigma * sigma;
    const double g = std::exp(-dot(d, d) / (2.0 * s2));
    const double c = -0.5 * k * g / s2;
    return {std::exp(-0.5 * k * g), {c * d.x, c * d.y}};
  }
  MetricSample sample(Vec2 p) const {
    const Vec2 d = p - center;
    const double s2 = sigma * sigma;
    const double d2 = dot(d, d);
    const double g = std::exp(-d2 / (2.0 * s2));
    const double lambda = 0.5 * k * g;
    const double c = -0.5 * k * g / s2;
    return {lambda, std::exp(-lambda), {c * d.x, c * d.y}, 0.5 * k * g * (d2 / (s2 * s2) - 2.0 / s2)};
  }
  bool is_radial() const { return center.x == 0.0 && center.y == 0.0; }
};

/// Radially symmetric metric given by its local speed c(r) = exp(-lambda).
/// Needs c'(0) = 0 for smoothness at the origin.
struct RadialSpeed {
  std::function<double(double)> c;
  std::function<double(double)> dc;
  std::function<double(double)> ddc;

  MetricSample sample(Vec2 p) const {
    const double r = norm(p);
    const double cv = c(r);
    const double d1 = dc(r);
    const double d2 = ddc(r);
    const double l1 = -d1 / cv;
    const double l2 = -(d2 * cv - d1 * d1) / (cv * cv);
    MetricSample s;
    s.lambda = -std::log(cv);
    s.speed = cv;
    if (r > 1e-12) {
      s.grad = {l1 * p.x / r, l1 * p.y / r};
      s.lap = l2 + l1 / r;
    } else {
      s.lap = 2.0 * l2;
    }
    return s;
  }
  FlowSample flow(Vec2 p) const {
    const MetricSample s = sample(p);
    return {s.speed, s.grad};
  }
  bool is_radial() const { return true; }
};

using IsothermalMetric = std::variant<Euclidean, ConstantPositive, ConstantNegative, Lens, RadialSpeed>;

struct MetricEval {
  double lambda = 0.0;
  Vec2 grad;
  double kappa = 0.0;
};

/// lambda, grad lambda and the Gaussian curvature kappa = -exp(-2 lambda) lap(lambda).
template <MetricModel M>
MetricEval eval_metric(const M& m, Vec2 p) {
  const MetricSample s = m.sample(p);
  return {s.lambda, s.grad, -s.speed * s.speed * s.lap};
}

inline MetricEval eval_metric(const IsothermalMetric& m, Vec2 p) {
  return std::visit([p](const auto& model) { return eval_metric(model, p); }, m);
}

/// Minimum over n_samples equispaced r in (0, R] of d/dr (r / c(r)), by
/// central differences. Positive means the Herglotz condition holds there.
template <MetricModel M>
double herglotz_margin(const M& m, double R, std::size_t n_samples = 1000) {
  if (!m.is_radial()) throw UsageError("herglotz_margin needs a metric that is radial about the origin");
  if (!(R > 0.0) || n_samples == 0) throw UsageError("herglotz_margin needs R > 0 and n_samples > 0");
  const double h = R / (10.0 * static_cast<double>(n_samples));
  auto phi = [&m](double r) { return r / m.flow({r, 0.0}).speed; };
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= n_samples; ++i) {
    const double r = R * static_cast<double>(i) / static_cast<double>(n_samples);
    margin = std::min(margin, (phi(r + h) - phi(r - h)) / (2.0 * h));
  }
  return margin;
}

inline double herglotz_margin(const IsothermalMetric& m, double R, std::size_t n_samples = 1000) {
  return std::visit([&](const auto& model) { return herglotz_margin(model, R, n_samples); }, m);
}

struct BoundaryPoint {
  Vec2 p;
  double nu = 0.0;  // angle of the unit inner normal, in [0, 2pi)
};

/// Domain {0 <= x^2 + y^2 <= r(arg(x, y))^2} bounded by a star-shaped curve.
class StarShapedDomain {
 public:
  enum class Kind { circle, ellipse, perturbed };

  static StarShapedDomain circle(double R) {
    if (!(R > 0.0)) throw UsageError("circle radius must be positive");
    return {Kind::circle, R, R, R, R};
  }

  static StarShapedDomain ellipse(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw UsageError("ellipse semi-axes must be positive");
    return {Kind::ellipse, a, b, std::max(a, b), std::min(a, b)};
  }

  /// r(beta) = a + b cos(4 beta)
  static StarShapedDomain perturbed(double a, double b) {
    if (!(a - std::abs(b) > 0.0)) throw UsageError("perturbed circle needs a > |b|");
    return {Kind::perturbed, a, b, a + std::abs(b), a - std::abs(b)};
  }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double r_max() const { return r_max_; }
  double r_min() const { return r_min_; }

  double radius(double beta) const {
    switch (kind_) {
      case Kind::circle:
        return a_;
      case Kind::ellipse: {
        const double bc = b_ * std::cos(beta);
        const double as = a_ * std::sin(beta);
        return a_ * b_ / std::sqrt(bc * bc + as * as);
      }
      case Kind::perturbed:
        return a_ + b_ * std::cos(4.0 * beta);
    }
    return a_;
  }

  double dradius(double beta) const {
    switch (kind_) {
      case Kind::circle:
        return 0.0;
      case Kind::ellipse: {
        const double c = std::cos(beta);
        const double s = std::sin(beta);
        const double d = b_ * b_ * c * c + a_ * a_ * s * s;
        return -a_ * b_ * (a_ * a_ - b_ * b_) * s * c / (d * std::sqrt(d));
      }
      case Kind::perturbed:
        return -4.0 * b_ * std::sin(4.0 * beta);
    }
    return 0.0;
  }

  /// |x| - r(arg x): negative inside, zero on the boundary.
  double gap(Vec2 p) const {
    const double r = std::sqrt(dot(p, p));
    if (kind_ == Kind::circle) return r - a_;
    return r - radius(wrap_two_pi(std::atan2(p.y, p.x)));
  }

  bool contains(Vec2 p) const {
    const double r2 = dot(p, p);
    if (kind_ == Kind::circle) return r2 <= a_ * a_;
    if (r2 <= r_min_ * r_min_) return true;
    if (r2 > r_max_ * r_max_) return false;
    const double r = radius(wrap_two_pi(std::atan2(p.y, p.x)));
    return r2 <= r * r;
  }

  friend bool operator==(const StarShapedDomain&, const StarShapedDomain&) = default;

 private:
  StarShapedDomain(Kind kind, double a, double b, double r_max, double r_min)
      : kind_(kind), a_(a), b_(b), r_max_(r_max), r_min_(r_min) {}

  Kind kind_;
  double a_;
  double b_;
  double r_max_;
  double r_min_;
};

inline bool inside(const StarShapedDomain& d, Vec2 p) { return d.contains(p); }

/// Boundary point at parameter beta and the angle of the inner normal, taken
/// as the tangent of the counterclockwise parameterization rotated by +pi/2.
inline BoundaryPoint boundary_point_and_normal(const StarShapedDomain& d, double beta) {
  const double r = d.radius(beta);
  const double dr = d.dradius(beta);
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const Vec2 tangent{dr * c - r * s, dr * s + r * c};
  return {{r * c, r * s}, wrap_two_pi(std::atan2(tangent.x, -tangent.y))};
}

/// A metric restricted to a domain. Rejects const_neg domains reaching |x| = R.
template <MetricModel M>
struct Manifold {
  M metric;
  StarShapedDomain domain;

  Manifold(M m, StarShapedDomain d) : metric(std::move(m)), domain(d) {
    if constexpr (std::same_as<M, ConstantNegative>) {
      if (!(domain.r_max() < metric.R))
        throw UsageError("const_neg computational domain must satisfy r_max < R");
    }
  }
};

template <MetricModel M>
Manifold(M, StarShapedDomain) -> Manifold<M>;

}  // namespace geotomo
