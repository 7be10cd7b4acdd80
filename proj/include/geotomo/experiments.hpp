#pragma once

// End-to-end pipelines shared by the command line tool and the acceptance
// suite: synthetic data, reconstruction and the error summaries.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "geotomo/config.hpp"
#include "geotomo/fiber_harmonics.hpp"
#include "geotomo/fields.hpp"
#include "geotomo/inversion.hpp"
#include "geotomo/io.hpp"
#include "geotomo/jacobi.hpp"
#include "geotomo/ray_transform.hpp"

namespace geotomo {

/// Step tied to the grid: one step per grid spacing of the 2 r_max square.
inline double default_step(const StarShapedDomain& d, std::size_t n) { return 2.0 * d.r_max() / static_cast<double>(n); }

struct InversionSetup {
  std::size_t n = 100;
  std::size_t n_theta = 0;  // 0: 2 n
  double dt = 0.0;          // 0: default_step
  std::size_t max_steps = 0;
  Formula formula = Formula::frc;
  std::size_t iterations = 0;
  PhantomParams phantom = default_smooth_phantom();
};

struct InversionOutcome {
  Phantom phantom;
  FanBeamData data;
  ReconstructionReport report;
  double dt = 0.0;

  ScalarGrid pointwise_error() const {
    ScalarGrid e = report.result;
    e -= phantom.grid;
    for (std::size_t k = 0; k < e.values().size(); ++k) e.set_flat(k, std::abs(e.values()[k]));
    return e;
  }
};

/// I0 f for frc, I1[X_perp h] for hrc, from the analytic phantom.
template <MetricModel M>
FanBeamData synthesize_data(const Manifold<M>& mf, const Phantom& ph, Formula formula, const InfluxGrid& g, double dt,
                            std::size_t max_steps) {
  const FieldSampler s = FieldSampler::analytic(ph.analytic, mf.domain);
  return formula == Formula::frc ? forward_i0(mf, s, g, dt, max_steps) : forward_i1_xperp(mf, s, g, dt, max_steps);
}

template <MetricModel M>
InversionOutcome run_inversion(const Manifold<M>& mf, const InversionSetup& s, const NeumannObserver& observer = {}) {
  const double dt = s.dt > 0.0 ? s.dt : default_step(mf.domain, s.n);
  const std::size_t max_steps = s.max_steps ? s.max_steps : default_max_steps(mf.domain, dt);
  const GridSpec spec{s.n, mf.domain.r_max()};
  Phantom ph = make_phantom(s.phantom, spec, mf.domain);
  FanBeamData data = synthesize_data(mf, ph, s.formula, build_influx_grid(s.n), dt, max_steps);
  const BasepointTable table = precompute_basepoints(mf, spec, s.n_theta ? s.n_theta : 2 * s.n, dt, max_steps);
  ReconstructionReport rep = neumann_invert(data, s.formula, s.iterations, mf, table, dt, &ph.grid, observer);
  return {std::move(ph), std::move(data), std::move(rep), dt};
}

/// Median of g over inside nodes whose position satisfies keep.
template <class Pred>
double band_median(const ScalarGrid& g, Pred&& keep) {
  std::vector<double> vals;
  for (std::size_t j = 0; j < g.n(); ++j)
    for (std::size_t i = 0; i < g.n(); ++i)
      if (g.inside(i, j) && keep(g.node(i, j))) vals.push_back(g(i, j));
  if (vals.empty()) throw UsageError("band contains no inside nodes");
  const auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
  std::nth_element(vals.begin(), mid, vals.end());
  if (vals.size() % 2) return *mid;
  const double upper = *mid;
  return 0.5 * (upper + *std::max_element(vals.begin(), mid));
}

/// Smooth bumps laid across the 1.2 x 0.8 ellipse, including both ends of the long axis.
inline PhantomParams equator_phantom() {
  PhantomParams p;
  p.kind = PhantomKind::smooth_bumps;
  p.bumps = {{{-0.8, 0.0}, 0.15, 1.0}, {{-0.45, 0.35}, 0.12, 0.7}, {{0.0, 0.0}, 0.15, 0.9},
             {{0.3, -0.35}, 0.12, 0.8}, {{0.8, 0.1}, 0.15, 0.6}};
  return p;
}

struct TerminatorSample {
  double k = 0.0;
  TerminatorResult beta_ter;
};

/// beta_Ter over lens strengths k on the given domain; lens centered at the origin.
inline std::vector<TerminatorSample> terminator_sweep(const std::vector<double>& ks, double sigma,
                                                      const StarShapedDomain& d, const TerminatorOptions& opt = {}) {
  std::vector<TerminatorSample> out;
  for (double k : ks) out.push_back({k, terminator(Manifold{Lens{k, sigma, {}}, d}, opt)});
  return out;
}

/// First k at which beta_Ter - 1 changes sign, interpolated linearly.
inline std::optional<double> simplicity_crossing(const std::vector<TerminatorSample>& sweep) {
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    const double a = sweep[i - 1].beta_ter.value - 1.0;
    const double b = sweep[i].beta_ter.value - 1.0;
    if ((a > 0.0) != (b > 0.0)) return sweep[i - 1].k + a / (a - b) * (sweep[i].k - sweep[i - 1].k);
  }
  return std::nullopt;
}

/// One reproducible run: a configuration, the formula and the error reported in the literature, if any.
struct ExperimentCase {
  std::string label;
  RunConfig config;
  Formula formula = Formula::frc;
  std::optional<double> reference_error;
  std::optional<PhantomParams> phantom;  // overrides the configured phantom
};

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline RunConfig lens_config(double k) {
  RunConfig c;
  c.metric = {"lens", 1.0, k, 0.25, {0.2, 0.0}};
  c.domain = {"circle", 1.0, 0.0, 1.0};
  return c;
}

inline std::vector<ExperimentCase> experiment_cases(const std::string& name, std::size_t n) {
  std::vector<ExperimentCase> cases;
  auto curvature = [&](const char* kind, double R, const char* dom, double a, double b, double ref) {
    ExperimentCase c;
    c.config.metric.kind = kind;
    c.config.metric.R = R;
    c.config.domain = {dom, a, b, 1.0};
    c.config.phantom = "disc_pack";
    c.label = std::string(kind) + "_R" + short_num(R) + "_" + dom;
    c.reference_error = ref;
    cases.push_back(c);
  };
  if (name == "cpc") {
    curvature("const_pos", 1.2, "circle", 1.0, 0.0, 0.117);
    curvature("const_pos", 2.0, "circle", 1.0, 0.0, 0.123);
    curvature("const_pos", 1.2, "ellipse", 1.0, 0.8, 0.113);
    curvature("const_pos", 2.0, "ellipse", 1.0, 0.8, 0.117);
  } else if (name == "cnc") {
    curvature("const_neg", 1.2, "circle", 1.0, 0.0, 0.203);
    curvature("const_neg", 2.0, "circle", 1.0, 0.0, 0.152);
    curvature("const_neg", 1.2, "perturbed", 1.0, 0.05, 0.205);
    curvature("const_neg", 2.0, "perturbed", 1.0, 0.05, 0.156);
  } else if (name == "nonsimple-equator") {
    ExperimentCase c;
    c.label = "const_pos_R1_ellipse";
    c.config.metric.kind = "const_pos";
    c.config.metric.R = 1.0;
    c.config.domain = {"ellipse", 1.2, 0.8, 1.0};
    c.phantom = equator_phantom();
    cases.push_back(c);
  } else if (name == "exp1" || name == "exp2" || name == "exp3") {
    for (double k : {0.3, 0.6, 1.2}) {
      ExperimentCase c;
      c.config = lens_config(k);
      c.config.iterations = 9;
      c.formula = name == "exp1" ? Formula::frc : Formula::hrc;
      c.config.phantom = name == "exp3" ? "disc_pack" : "smooth_bumps";
      c.label = "lens_k" + short_num(k);
      cases.push_back(c);
    }
  } else {
    throw UsageError("unknown experiment " + name);
  }
  for (auto& c : cases) c.config.n = n;
  return cases;
}

}  // namespace geotomo
