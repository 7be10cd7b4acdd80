#pragma once

// Text formats: fan-beam CSV, grid CSV, PGM renderings and geodesic dumps.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "geotomo/fields.hpp"
#include "geotomo/geodesic_flow.hpp"
#include "geotomo/jacobi.hpp"
#include "geotomo/ray_transform.hpp"

namespace geotomo::io {

inline constexpr const char* kFanBeamHeader = "# geotomo fanbeam v1";
inline constexpr const char* kPreppedHeader = "# geotomo fanbeam-prepped v1";
inline constexpr const char* kGridHeader = "# geotomo grid v1";

/// %.17g, so values survive a round trip bit for bit.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

inline void write_fanbeam(std::ostream& out, const FanBeamData& d, bool prepped = false) {
  out << (prepped ? kPreppedHeader : kFanBeamHeader) << '\n';
  out << "n_beta=" << d.grid.n_beta << ",n_alpha=" << d.grid.n_alpha << '\n';
  for (std::size_t i = 0; i < d.grid.n_beta; ++i)
    for (std::size_t j = 0; j < d.grid.n_alpha; ++j)
      out << num(d.grid.beta(i)) << ',' << num(d.grid.alpha(j)) << ',' << num(d.at(i, j)) << '\n';
}

inline void write_fanbeam(const std::string& path, const FanBeamData& d, bool prepped = false) {
  auto out = open_out(path);
  write_fanbeam(out, d, prepped);
}

inline FanBeamData read_fanbeam(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || (line != kFanBeamHeader && line != kPreppedHeader))
    throw UsageError("not a geotomo fanbeam file");
  std::size_t nb = 0;
  std::size_t na = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "n_beta=%zu,n_alpha=%zu", &nb, &na) != 2 || nb == 0 ||
      na == 0)
    throw UsageError("malformed fanbeam size line: " + line);
  FanBeamData d(InfluxGrid{nb, na});
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    double b;
    double a;
    if (!std::getline(in, line) || std::sscanf(line.c_str(), "%lf,%lf,%lf", &b, &a, &d.values[k]) != 3)
      throw UsageError("fanbeam file truncated at row " + std::to_string(k));
  }
  return d;
}

inline FanBeamData read_fanbeam(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return read_fanbeam(in);
}

inline void write_grid(std::ostream& out, const ScalarGrid& g) {
  out << kGridHeader << '\n';
  out << "n=" << g.n() << ",r_max=" << num(g.spec().r_max) << '\n';
  for (std::size_t j = 0; j < g.n(); ++j)
    for (std::size_t i = 0; i < g.n(); ++i) {
      const Vec2 p = g.node(i, j);
      out << i << ',' << j << ',' << num(p.x) << ',' << num(p.y) << ',' << num(g(i, j)) << '\n';
    }
}

inline void write_grid(const std::string& path, const ScalarGrid& g) {
  auto out = open_out(path);
  write_grid(out, g);
}

/// Reads values back onto a grid masked by d.
inline ScalarGrid read_grid(std::istream& in, const StarShapedDomain& d) {
  std::string line;
  if (!std::getline(in, line) || line != kGridHeader) throw UsageError("not a geotomo grid file");
  std::size_t n = 0;
  double r_max = 0.0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "n=%zu,r_max=%lf", &n, &r_max) != 2 || n < 3)
    throw UsageError("malformed grid size line: " + line);
  ScalarGrid g(GridSpec{n, r_max}, d);
  for (std::size_t k = 0; k < n * n; ++k) {
    std::size_t i;
    std::size_t j;
    double x;
    double y;
    double v;
    if (!std::getline(in, line) || std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%lf", &i, &j, &x, &y, &v) != 5 ||
        i >= n || j >= n)
      throw UsageError("grid file truncated or malformed at row " + std::to_string(k));
    g.set(i, j, v);
  }
  return g;
}

/// Plain PGM, 8-bit, linear min-max scaling; row 0 is the top (largest y).
inline void write_pgm(std::ostream& out, const ScalarGrid& g) {
  const auto& v = g.values();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  out << "P2\n" << g.n() << ' ' << g.n() << "\n255\n";
  for (std::size_t r = 0; r < g.n(); ++r) {
    const std::size_t j = g.n() - 1 - r;
    for (std::size_t i = 0; i < g.n(); ++i) {
      const int level = span > 0.0 ? static_cast<int>(std::lround(255.0 * (g(i, j) - lo) / span)) : 0;
      out << level << (i + 1 < g.n() ? ' ' : '\n');
    }
  }
}

inline void write_pgm(const std::string& path, const ScalarGrid& g) {
  auto out = open_out(path);
  write_pgm(out, g);
}

inline void write_path(std::ostream& out, const GeodesicPath& p) {
  out << "t,x,y,theta\n";
  for (std::size_t k = 0; k < p.samples.size(); ++k) {
    const SMPoint& s = p.samples[k];
    out << num(static_cast<double>(k) * p.dt) << ',' << num(s.x) << ',' << num(s.y) << ',' << num(s.theta) << '\n';
  }
  out << num(p.tau) << ',' << num(p.exit_point.x) << ',' << num(p.exit_point.y) << ',' << num(p.exit_theta) << '\n';
}

struct PathIndexRow {
  InfluxCoord coord;
  double tau;
  Vec2 exit;
};

inline void write_path_index(std::ostream& out, const std::vector<PathIndexRow>& rows) {
  out << "beta,alpha,tau,exit_x,exit_y\n";
  for (const auto& r : rows)
    out << num(r.coord.beta) << ',' << num(r.coord.alpha) << ',' << num(r.tau) << ',' << num(r.exit.x) << ','
        << num(r.exit.y) << '\n';
}

struct ConjugateRow {
  InfluxCoord coord;
  ConjugatePoint point;
};

inline void write_conjugates(std::ostream& out, const std::vector<ConjugateRow>& rows) {
  out << "beta,alpha,t,x,y\n";
  for (const auto& r : rows)
    out << num(r.coord.beta) << ',' << num(r.coord.alpha) << ',' << num(r.point.t) << ',' << num(r.point.position.x)
        << ',' << num(r.point.position.y) << '\n';
}

}  // namespace geotomo::io
