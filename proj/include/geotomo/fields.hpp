#pragma once

// Cartesian scalar grids on [-r_max, r_max]^2 masked by a domain, plus
// interpolation, masked finite differences, error norms and phantoms.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "geotomo/core.hpp"
#include "geotomo/geometry.hpp"

namespace geotomo {

/// n x n nodes including the corners of [-r_max, r_max]^2.
struct GridSpec {
  std::size_t n = 0;
  double r_max = 1.0;

  double spacing() const { return 2.0 * r_max / static_cast<double>(n - 1); }
  double coord(std::size_t i) const { return -r_max + static_cast<double>(i) * spacing(); }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Values stored row-major with j (the y index) outer: index j * n + i.
/// Nodes outside the domain hold 0.
class ScalarGrid {
 public:
  ScalarGrid(GridSpec spec, StarShapedDomain domain)
      : spec_(spec), domain_(domain), values_(spec.n * spec.n, 0.0), mask_(spec.n * spec.n, 0) {
    if (spec.n < 2) throw UsageError("grid side length must be at least 2");
    for (std::size_t j = 0; j < spec.n; ++j)
      for (std::size_t i = 0; i < spec.n; ++i)
        mask_[j * spec.n + i] = domain.contains(node(i, j)) ? 1 : 0;
  }

  template <class F>
  static ScalarGrid from_function(GridSpec spec, StarShapedDomain domain, F&& f) {
    ScalarGrid g(spec, domain);
    for (std::size_t j = 0; j < spec.n; ++j)
      for (std::size_t i = 0; i < spec.n; ++i)
        if (g.inside(i, j)) g.values_[j * spec.n + i] = f(g.node(i, j));
    return g;
  }

  const GridSpec& spec() const { return spec_; }
  const StarShapedDomain& domain() const { return domain_; }
  std::size_t n() const { return spec_.n; }
  Vec2 node(std::size_t i, std::size_t j) const { return {spec_.coord(i), spec_.coord(j)}; }
  bool inside(std::size_t i, std::size_t j) const { return mask_[j * spec_.n + i] != 0; }
  bool inside_flat(std::size_t idx) const { return mask_[idx] != 0; }

  double operator()(std::size_t i, std::size_t j) const { return values_[j * spec_.n + i]; }
  /// Writes are ignored at outside nodes to keep the zero-outside invariant.
  void set(std::size_t i, std::size_t j, double v) {
    if (inside(i, j)) values_[j * spec_.n + i] = v;
  }
  const std::vector<double>& values() const { return values_; }
  void set_flat(std::size_t idx, double v) {
    if (mask_[idx]) values_[idx] = v;
  }

  ScalarGrid& operator+=(const ScalarGrid& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarGrid& operator-=(const ScalarGrid& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarGrid& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

 private:
  GridSpec spec_;
  StarShapedDomain domain_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

inline double sample_bilinear(const ScalarGrid& g, Vec2 p) {
  const GridSpec& s = g.spec();
  if (std::abs(p.x) > s.r_max || std::abs(p.y) > s.r_max) return 0.0;
  if (!g.domain().contains(p)) return 0.0;
  const double h = s.spacing();
  const double u = (p.x + s.r_max) / h;
  const double v = (p.y + s.r_max) / h;
  const std::size_t last = s.n - 2;
  const std::size_t i = std::min(static_cast<std::size_t>(u), last);
  const std::size_t j = std::min(static_cast<std::size_t>(v), last);
  const double fu = u - static_cast<double>(i);
  const double fv = v - static_cast<double>(j);
  return (1.0 - fv) * ((1.0 - fu) * g(i, j) + fu * g(i + 1, j)) + fv * ((1.0 - fu) * g(i, j + 1) + fu * g(i + 1, j + 1));
}

/// Masked differences: centered where both neighbours are inside, one-sided
/// where only one is, 0 for isolated and outside nodes.
inline std::pair<ScalarGrid, ScalarGrid> grad_centered(const ScalarGrid& g) {
  const std::size_t n = g.n();
  if (n < 3) throw UsageError("grad_centered needs n >= 3");
  const double h = g.spec().spacing();
  ScalarGrid gx(g.spec(), g.domain());
  ScalarGrid gy(g.spec(), g.domain());
  auto diff = [&](std::size_t i, std::size_t j, int di, int dj) {
    const bool has_lo = (di ? i > 0 : j > 0) && g.inside(i - di, j - dj);
    const bool has_hi = (di ? i + 1 < n : j + 1 < n) && g.inside(i + di, j + dj);
    if (has_lo && has_hi) return (g(i + di, j + dj) - g(i - di, j - dj)) / (2.0 * h);
    if (has_hi) return (g(i + di, j + dj) - g(i, j)) / h;
    if (has_lo) return (g(i, j) - g(i - di, j - dj)) / h;
    return 0.0;
  };
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      if (!g.inside(i, j)) continue;
      gx.set(i, j, diff(i, j, 1, 0));
      gy.set(i, j, diff(i, j, 0, 1));
    }
  return {std::move(gx), std::move(gy)};
}

/// ||a - b|| / ||b|| over the inside nodes.
inline double rel_l2(const ScalarGrid& a, const ScalarGrid& b) {
  if (!(a.spec() == b.spec())) throw UsageError("rel_l2 needs grids of matching shape");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    if (!b.inside_flat(k)) continue;
    const double d = a.values()[k] - b.values()[k];
    num += d * d;
    den += b.values()[k] * b.values()[k];
  }
  if (den == 0.0) throw UndefinedNorm("relative error against a zero reference");
  return std::sqrt(num / den);
}

// Phantoms ------------------------------------------------------------------

struct Bump {
  Vec2 center;
  double sigma = 0.15;
  double amp = 1.0;
};

struct Disc {
  Vec2 center;
  double radius = 0.1;
  double amp = 1.0;
};

enum class PhantomKind { smooth_bumps, disc_pack };

struct PhantomParams {
  PhantomKind kind = PhantomKind::smooth_bumps;
  std::vector<Bump> bumps;
  std::vector<Disc> discs;
};

/// Three Gaussian bumps of width 0.15 on the circle of radius 0.45.
inline PhantomParams default_smooth_phantom() {
  PhantomParams p;
  p.kind = PhantomKind::smooth_bumps;
  const double amps[] = {1.0, 0.8, 0.6};
  const double angles[] = {kPi / 6.0, 5.0 * kPi / 6.0, 3.0 * kPi / 2.0};
  for (int i = 0; i < 3; ++i)
    p.bumps.push_back({{0.45 * std::cos(angles[i]), 0.45 * std::sin(angles[i])}, 0.15, amps[i]});
  return p;
}

inline PhantomParams default_disc_pack() {
  PhantomParams p;
  p.kind = PhantomKind::disc_pack;
  p.discs = {{{-0.2, 0.1}, 0.3, 1.0}, {{0.45, 0.3}, 0.15, 0.8}, {{0.35, -0.45}, 0.1, 0.6}, {{-0.1, -0.55}, 0.1, 0.9}};
  return p;
}

/// Default sizes and amplitudes with centers drawn uniformly in the disk of
/// radius 0.7 r_min of the domain.
inline PhantomParams random_phantom(PhantomKind kind, const StarShapedDomain& d, std::uint64_t seed) {
  PhantomParams p = kind == PhantomKind::smooth_bumps ? default_smooth_phantom() : default_disc_pack();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    const double r = 0.7 * d.r_min() * std::sqrt(unit(rng));
    const double a = kTwoPi * unit(rng);
    return Vec2{r * std::cos(a), r * std::sin(a)};
  };
  for (auto& b : p.bumps) b.center = draw();
  for (auto& c : p.discs) c.center = draw();
  return p;
}

inline double eval_phantom(const PhantomParams& params, Vec2 x) {
  double v = 0.0;
  if (params.kind == PhantomKind::smooth_bumps) {
    for (const auto& b : params.bumps) {
      const Vec2 d = x - b.center;
      v += b.amp * std::exp(-dot(d, d) / (2.0 * b.sigma * b.sigma));
    }
  } else {
    for (const auto& c : params.discs)
      if (norm(x - c.center) < c.radius) v += c.amp;
  }
  return v;
}

struct Phantom {
  ScalarGrid grid;
  std::function<double(Vec2)> analytic;  // masked to the domain
  std::vector<std::string> warnings;
};

inline Phantom make_phantom(const PhantomParams& params, GridSpec spec, const StarShapedDomain& d) {
  std::vector<std::string> warnings;
  auto outside = [&d](Vec2 c, double reach) { return norm(c) - reach > d.r_max(); };
  for (const auto& b : params.bumps)
    if (outside(b.center, 3.0 * b.sigma)) warnings.push_back("bump centered outside the domain");
  for (const auto& c : params.discs)
    if (outside(c.center, c.radius)) warnings.push_back("disc lies outside the domain");
  std::function<double(Vec2)> analytic = [params, d](Vec2 x) { return d.contains(x) ? eval_phantom(params, x) : 0.0; };
  ScalarGrid grid = ScalarGrid::from_function(spec, d, analytic);
  return {std::move(grid), std::move(analytic), std::move(warnings)};
}

// Samplers ------------------------------------------------------------------

/// Field access for the forward transforms: an analytic closure or a grid
/// read by bilinear interpolation. Both read 0 outside the domain.
class FieldSampler {
 public:
  static FieldSampler analytic(std::function<double(Vec2)> f, StarShapedDomain d) {
    FieldSampler s;
    s.fn_ = std::move(f);
    s.domain_ = d;
    return s;
  }
  static FieldSampler from_grid(ScalarGrid g) {
    FieldSampler s;
    s.domain_ = g.domain();
    s.grid_.emplace(std::move(g));
    return s;
  }

  double operator()(Vec2 p) const {
    if (grid_) return sample_bilinear(*grid_, p);
    return domain_.contains(p) ? fn_(p) : 0.0;
  }

 private:
  FieldSampler() : domain_(StarShapedDomain::circle(1.0)) {}

  std::function<double(Vec2)> fn_;
  StarShapedDomain domain_;
  std::optional<ScalarGrid> grid_;
};

}  // namespace geotomo
