#pragma once

// Backprojection for the two reconstruction formulas and the Neumann-series
// driver. Basepoints of every (gridpoint, direction) pair are computed once
// and reused across iterations.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geotomo/fiber_harmonics.hpp"
#include "geotomo/fields.hpp"
#include "geotomo/geodesic_flow.hpp"
#include "geotomo/ray_transform.hpp"

namespace geotomo {

struct BasepointTable {
  GridSpec spec;
  StarShapedDomain domain = StarShapedDomain::circle(1.0);
  std::size_t n_theta = 0;
  double dt = 0.0;
  std::size_t max_steps = 0;
  std::vector<std::size_t> nodes;     // flat grid indices of inside nodes
  std::vector<InfluxCoord> entries;   // nodes.size() * n_theta, direction l fastest
  std::size_t trapped_entries = 0;
  std::vector<std::size_t> trapped_nodes;  // flat indices with at least one trapped direction

  double theta(std::size_t l) const { return kTwoPi * static_cast<double>(l) / static_cast<double>(n_theta); }
  const InfluxCoord& entry(std::size_t node, std::size_t l) const { return entries[node * n_theta + l]; }
  static bool is_trapped(const InfluxCoord& c) { return std::isnan(c.beta); }
};

template <MetricModel M>
BasepointTable precompute_basepoints(const Manifold<M>& mf, GridSpec spec, std::size_t n_theta, double dt,
                                     std::size_t max_steps) {
  detail::check_step(dt);
  if (n_theta < 16 || n_theta % 4 != 0) throw UsageError("n_theta must be >= 16 and a multiple of 4");
  BasepointTable t;
  t.spec = spec;
  t.domain = mf.domain;
  t.n_theta = n_theta;
  t.dt = dt;
  t.max_steps = max_steps;
  const ScalarGrid mask(spec, mf.domain);
  for (std::size_t k = 0; k < spec.n * spec.n; ++k)
    if (mask.inside_flat(k)) t.nodes.push_back(k);
  t.entries.resize(t.nodes.size() * n_theta);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  parallel_for(t.nodes.size(), [&](std::size_t a) {
    const std::size_t flat = t.nodes[a];
    const Vec2 x{spec.coord(flat % spec.n), spec.coord(flat / spec.n)};
    for (std::size_t l = 0; l < n_theta; ++l) {
      const auto c = detail::basepoint_or_trapped(mf, x, t.theta(l), dt, max_steps);
      t.entries[a * n_theta + l] = c ? *c : InfluxCoord{nan, nan};
    }
  });
  for (std::size_t a = 0; a < t.nodes.size(); ++a) {
    bool any = false;
    for (std::size_t l = 0; l < n_theta; ++l)
      if (BasepointTable::is_trapped(t.entry(a, l))) {
        ++t.trapped_entries;
        any = true;
      }
    if (any) t.trapped_nodes.push_back(t.nodes[a]);
  }
  return t;
}

template <MetricModel M>
BasepointTable precompute_basepoints(const Manifold<M>& mf, GridSpec spec, std::size_t n_theta, double dt) {
  return precompute_basepoints(mf, spec, n_theta, dt, default_max_steps(mf.domain, dt));
}

/// Bilinear interpolation on the (beta, alpha) grid: periodic in beta,
/// clamped to the node range in alpha.
inline double sample_fan_beam(const FanBeamData& d, InfluxCoord c) {
  const InfluxGrid& g = d.grid;
  const double u = wrap_two_pi(c.beta) / g.beta_step();
  const double fl = std::floor(u);
  const double fu = u - fl;
  const std::size_t i0 = static_cast<std::size_t>(fl) % g.n_beta;
  const std::size_t i1 = (i0 + 1) % g.n_beta;
  const double v = std::clamp((c.alpha - g.alpha(0)) / g.alpha_step(), 0.0, static_cast<double>(g.n_alpha - 1));
  const std::size_t j0 = std::min(static_cast<std::size_t>(v), g.n_alpha - 1);
  const std::size_t j1 = std::min(j0 + 1, g.n_alpha - 1);
  const double fv = v - static_cast<double>(j0);
  return (1.0 - fu) * ((1.0 - fv) * d.at(i0, j0) + fv * d.at(i0, j1)) + fu * ((1.0 - fv) * d.at(i1, j0) + fv * d.at(i1, j1));
}

namespace detail {

inline void check_table_match(const FanBeamData& prepped, const BasepointTable& table) {
  if (!(prepped.grid == InfluxGrid{2 * table.spec.n, table.spec.n}))
    throw UsageError("fan-beam grid " + std::to_string(prepped.grid.n_beta) + "x" +
                     std::to_string(prepped.grid.n_alpha) + " does not match the basepoint table grid n=" +
                     std::to_string(table.spec.n));
}

}  // namespace detail

/// f ~ exp(-2 lambda)/(2 pi) (-d_x(e^lambda v) + d_y(e^lambda u)) where
/// (u, v) = integral of w_psi (cos, sin) over directions.
template <MetricModel M>
ScalarGrid backproject_frc(const FanBeamData& prepped, const BasepointTable& table, const Manifold<M>& mf) {
  detail::check_table_match(prepped, table);
  ScalarGrid eu(table.spec, table.domain);
  ScalarGrid ev(table.spec, table.domain);
  const double dtheta = kTwoPi / static_cast<double>(table.n_theta);
  std::vector<double> cs(table.n_theta);
  std::vector<double> sn(table.n_theta);
  for (std::size_t l = 0; l < table.n_theta; ++l) {
    cs[l] = std::cos(table.theta(l));
    sn[l] = std::sin(table.theta(l));
  }
  std::vector<double> us(table.nodes.size());
  std::vector<double> vs(table.nodes.size());
  parallel_for(table.nodes.size(), [&](std::size_t a) {
    double u = 0.0;
    double v = 0.0;
    for (std::size_t l = 0; l < table.n_theta; ++l) {
      const InfluxCoord& c = table.entry(a, l);
      if (BasepointTable::is_trapped(c)) continue;
      const double w = sample_fan_beam(prepped, c);
      u += w * cs[l];
      v += w * sn[l];
    }
    us[a] = dtheta * u;
    vs[a] = dtheta * v;
  });
  std::vector<double> lambda(table.nodes.size());
  for (std::size_t a = 0; a < table.nodes.size(); ++a) {
    const std::size_t flat = table.nodes[a];
    const Vec2 x{table.spec.coord(flat % table.spec.n), table.spec.coord(flat / table.spec.n)};
    lambda[a] = mf.metric.sample(x).lambda;
    const double el = std::exp(lambda[a]);
    eu.set_flat(flat, el * us[a]);
    ev.set_flat(flat, el * vs[a]);
  }
  const auto [dv_dx, dv_dy] = grad_centered(ev);
  const auto [du_dx, du_dy] = grad_centered(eu);
  ScalarGrid out(table.spec, table.domain);
  for (std::size_t a = 0; a < table.nodes.size(); ++a) {
    const std::size_t flat = table.nodes[a];
    const double div = -dv_dx.values()[flat] + du_dy.values()[flat];
    out.set_flat(flat, std::exp(-2.0 * lambda[a]) / kTwoPi * div);
  }
  return out;
}

/// h ~ -(1/2 pi) integral of w_psi over directions.
inline ScalarGrid backproject_hrc(const FanBeamData& prepped, const BasepointTable& table) {
  detail::check_table_match(prepped, table);
  ScalarGrid out(table.spec, table.domain);
  const double dtheta = kTwoPi / static_cast<double>(table.n_theta);
  std::vector<double> sums(table.nodes.size());
  parallel_for(table.nodes.size(), [&](std::size_t a) {
    double s = 0.0;
    for (std::size_t l = 0; l < table.n_theta; ++l) {
      const InfluxCoord& c = table.entry(a, l);
      if (!BasepointTable::is_trapped(c)) s += sample_fan_beam(prepped, c);
    }
    sums[a] = s;
  });
  for (std::size_t a = 0; a < table.nodes.size(); ++a) out.set_flat(table.nodes[a], -dtheta * sums[a] / kTwoPi);
  return out;
}

/// Prep followed by the matching backprojection: the approximate inverse A.
template <MetricModel M>
ScalarGrid approximate_inverse(const FanBeamData& data, Formula formula, const BasepointTable& table,
                               const Manifold<M>& mf) {
  const FanBeamData w = prep(data, formula);
  return formula == Formula::frc ? backproject_frc(w, table, mf) : backproject_hrc(w, table);
}

/// Forward operator matching the formula, applied to a grid through bilinear sampling.
template <MetricModel M>
FanBeamData grid_forward(const ScalarGrid& g, Formula formula, const InfluxGrid& influx, const Manifold<M>& mf,
                         double dt, std::size_t max_steps) {
  const FieldSampler s = FieldSampler::from_grid(g);
  return formula == Formula::frc ? forward_i0(mf, s, influx, dt, max_steps)
                                 : forward_i1_xperp(mf, s, influx, dt, max_steps);
}

struct ReconstructionReport {
  ScalarGrid result;
  std::vector<std::optional<double>> field_error;  // relative L2 vs truth, per iteration
  std::vector<double> data_error;                  // relative L2 of re-forwarded data vs input
  std::vector<std::size_t> trapped_nodes;          // gridpoints with directions dropped as trapped
  bool aborted = false;
  std::string abort_reason;
};

/// Called after each iteration k with the partial sum f and the increment g.
using NeumannObserver = std::function<void(std::size_t k, const ScalarGrid& f, const ScalarGrid& g)>;

/// Partial sum of f = sum_k (Id - A I)^k A D. Iteration 0 is the one-shot result.
template <MetricModel M>
ReconstructionReport neumann_invert(const FanBeamData& data, Formula formula, std::size_t iterations,
                                    const Manifold<M>& mf, const BasepointTable& table, double dt,
                                    const ScalarGrid* truth = nullptr, const NeumannObserver& observer = {}) {
  const std::size_t max_steps = default_max_steps(mf.domain, dt);
  ScalarGrid g = approximate_inverse(data, formula, table, mf);
  ReconstructionReport rep{g, {}, {}, table.trapped_nodes, false, {}};
  auto record = [&](const FanBeamData& forwarded) {
    rep.field_error.push_back(truth ? std::optional<double>(rel_l2(rep.result, *truth)) : std::nullopt);
    rep.data_error.push_back(rel_l2(forwarded, data));
  };
  try {
    // I is linear, so I f is accumulated from the I g needed by the update.
    FanBeamData ig = grid_forward(g, formula, data.grid, mf, dt, max_steps);
    FanBeamData i_f = ig;
    record(i_f);
    if (observer) observer(0, rep.result, g);
    for (std::size_t k = 1; k <= iterations; ++k) {
      g -= approximate_inverse(ig, formula, table, mf);
      rep.result += g;
      ig = grid_forward(g, formula, data.grid, mf, dt, max_steps);
      for (std::size_t q = 0; q < i_f.values.size(); ++q) i_f.values[q] += ig.values[q];
      record(i_f);
      if (observer) observer(k, rep.result, g);
    }
  } catch (const TrappedGeodesic& e) {
    rep.aborted = true;
    rep.abort_reason = e.what();
  }
  return rep;
}

}  // namespace geotomo
