#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "geotomo/config.hpp"
#include "geotomo/io.hpp"

using namespace geotomo;

namespace {

const auto kDisk = StarShapedDomain::circle(1.0);

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return config_from_key_values(parse_key_values(in));
}

std::string base_config() { return "metric.kind = euclidean\ndomain.kind = circle\n"; }

}  // namespace

TEST(FanBeamFile, RoundTripIsExact) {
  FanBeamData d(InfluxGrid{6, 4});
  for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] = std::sin(0.7 * static_cast<double>(k)) / 3.0;
  std::stringstream s;
  io::write_fanbeam(s, d);
  const FanBeamData back = io::read_fanbeam(s);
  EXPECT_EQ(back.grid, d.grid);
  EXPECT_EQ(back.values, d.values);
}

TEST(FanBeamFile, HeaderAndRowLayout) {
  FanBeamData d(InfluxGrid{8, 4});
  d.at(1, 2) = 2.5;
  std::stringstream s;
  io::write_fanbeam(s, d, true);
  std::string line;
  std::getline(s, line);
  EXPECT_EQ(line, "# geotomo fanbeam-prepped v1");
  std::getline(s, line);
  EXPECT_EQ(line, "n_beta=8,n_alpha=4");
  for (int r = 0; r <= 4 + 2; ++r) std::getline(s, line);
  // Row for node (1, 2): beta = pi/4, alpha = pi/8.
  double b, a, v;
  ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &b, &a, &v), 3);
  EXPECT_DOUBLE_EQ(b, kPi / 4.0);
  EXPECT_DOUBLE_EQ(a, kPi / 8.0);
  EXPECT_EQ(v, 2.5);
  std::stringstream plain;
  io::write_fanbeam(plain, d);
  std::getline(plain, line);
  EXPECT_EQ(line, "# geotomo fanbeam v1");
}

TEST(FanBeamFile, RejectsMalformedInput) {
  std::istringstream bad_header("# something else\nn_beta=1,n_alpha=1\n0,0,0\n");
  EXPECT_THROW(io::read_fanbeam(bad_header), UsageError);
  std::istringstream bad_size("# geotomo fanbeam v1\nn_beta=x\n");
  EXPECT_THROW(io::read_fanbeam(bad_size), UsageError);
  std::istringstream truncated("# geotomo fanbeam v1\nn_beta=1,n_alpha=2\n0,0,1\n");
  EXPECT_THROW(io::read_fanbeam(truncated), UsageError);
  EXPECT_THROW(io::read_fanbeam(std::string("/nonexistent/file.csv")), UsageError);
}

TEST(GridFile, RoundTripIsExact) {
  const ScalarGrid g = ScalarGrid::from_function({13, 1.0}, kDisk, [](Vec2 p) { return std::exp(p.x) * p.y / 7.0; });
  std::stringstream s;
  io::write_grid(s, g);
  const ScalarGrid back = io::read_grid(s, kDisk);
  EXPECT_EQ(back.spec(), g.spec());
  EXPECT_EQ(back.values(), g.values());
}

TEST(GridFile, HeaderAndRowOrder) {
  ScalarGrid g({3, 2.0}, StarShapedDomain::circle(5.0));
  g.set(1, 0, 4.0);
  std::stringstream s;
  io::write_grid(s, g);
  std::string line;
  std::getline(s, line);
  EXPECT_EQ(line, "# geotomo grid v1");
  std::getline(s, line);
  EXPECT_EQ(line, "n=3,r_max=2");
  std::getline(s, line);
  EXPECT_EQ(line, "0,0,-2,-2,0");
  std::getline(s, line);
  EXPECT_EQ(line, "1,0,0,-2,4");
  std::size_t rows = 2;
  while (std::getline(s, line)) ++rows;
  EXPECT_EQ(rows, 9u);
}

TEST(GridFile, RejectsMalformedInput) {
  std::istringstream bad("# geotomo grid v1\nn=3,r_max=1\n0,0,0,0\n");
  EXPECT_THROW(io::read_grid(bad, kDisk), UsageError);
  std::istringstream out_of_range("# geotomo grid v1\nn=3,r_max=1\n5,0,0,0,0\n");
  EXPECT_THROW(io::read_grid(out_of_range, kDisk), UsageError);
}

TEST(Pgm, ScalesMinToZeroAndMaxTo255) {
  ScalarGrid g({3, 1.0}, StarShapedDomain::circle(5.0));
  g.set(0, 2, 1.0);   // top-left
  g.set(2, 0, -1.0);  // bottom-right
  std::stringstream s;
  io::write_pgm(s, g);
  EXPECT_EQ(s.str(), "P2\n3 3\n255\n255 128 128\n128 128 128\n128 128 0\n");
}

TEST(Pgm, ConstantGridIsBlack) {
  std::stringstream s;
  io::write_pgm(s, ScalarGrid({2, 1.0}, kDisk));
  EXPECT_EQ(s.str(), "P2\n2 2\n255\n0 0\n0 0\n");
}

TEST(PathFile, SamplesThenExitRow) {
  GeodesicPath p;
  p.dt = 0.5;
  p.samples = {{-1.0, 0.0, 0.0}, {-0.5, 0.0, 0.0}};
  p.tau = 0.75;
  p.exit_point = {-0.25, 0.0};
  p.exit_theta = 0.0;
  std::stringstream s;
  io::write_path(s, p);
  EXPECT_EQ(s.str(), "t,x,y,theta\n0,-1,0,0\n0.5,-0.5,0,0\n0.75,-0.25,0,0\n");
}

TEST(Config, ParsesKeysAndComments) {
  const RunConfig c = parse(
      "# lens run\n"
      "metric.kind = lens   # trailing comment\n"
      "metric.k = 0.3\n"
      "metric.sigma=0.2\n"
      "metric.center_x = 0.2\n"
      "\n"
      "domain.kind = ellipse\n"
      "domain.a = 1.2\n"
      "domain.b = 0.8\n"
      "grid.n = 40\n"
      "grid.n_theta = 64\n"
      "solver.dt = 0.025\n"
      "solver.iterations = 3\n"
      "phantom.kind = disc_pack\n"
      "phantom.random = true\n"
      "seed = 99\n"
      "threads = 2\n"
      "io.out_dir = results\n");
  EXPECT_EQ(c.metric.kind, "lens");
  EXPECT_EQ(c.metric.k, 0.3);
  EXPECT_EQ(c.metric.sigma, 0.2);
  EXPECT_EQ(c.metric.center.x, 0.2);
  EXPECT_EQ(c.domain.kind, "ellipse");
  EXPECT_EQ(c.n, 40u);
  EXPECT_EQ(c.theta_count(), 64u);
  EXPECT_EQ(c.dt, 0.025);
  EXPECT_EQ(c.iterations, 3u);
  EXPECT_EQ(c.phantom, "disc_pack");
  EXPECT_TRUE(c.random_phantom);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.out_dir, "results");
}

TEST(Config, Defaults) {
  const RunConfig c = parse(base_config());
  EXPECT_EQ(c.n, 100u);
  EXPECT_EQ(c.theta_count(), 200u);
  EXPECT_EQ(c.step_budget(kDisk), 800u);
  EXPECT_EQ(c.iterations, 0u);
  EXPECT_EQ(c.phantom, "smooth_bumps");
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse("metric.kind = euclidean\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "grid.size = 3\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "grid.n = 4\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "solver.dt = 0\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "solver.dt = -0.1\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "solver.iterations = -1\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "grid.n_theta = 30\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "grid.n = ten\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "phantom.kind = shepp_logan\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "phantom.random = maybe\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "grid.n = 20\ngrid.n = 30\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + "no equals sign\n"), ConfigError);
  EXPECT_THROW(parse(base_config() + " = 3\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), ConfigError);
}

TEST(Config, ConfigErrorIsUsageError) {
  try {
    parse("domain.kind = circle\n");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_STREQ(e.tag(), "config");
  }
}

TEST(Config, BuildsDomainsAndMetrics) {
  DomainConfig d;
  d.kind = "ellipse";
  d.a = 1.2;
  d.b = 0.8;
  EXPECT_DOUBLE_EQ(make_domain(d).r_max(), 1.2);
  d.kind = "square";
  EXPECT_THROW(make_domain(d), ConfigError);
  d.kind = "ellipse";
  d.b = -1.0;
  EXPECT_THROW(make_domain(d), ConfigError);

  MetricConfig m;
  m.kind = "const_neg";
  m.R = 2.0;
  EXPECT_TRUE(std::holds_alternative<ConstantNegative>(make_metric(m)));
  m.R = 0.0;
  EXPECT_THROW(make_metric(m), ConfigError);
  m.kind = "hyperbolic";
  m.R = 1.0;
  EXPECT_THROW(make_metric(m), ConfigError);
}

TEST(Config, WithManifoldReportsInvalidPairsAsConfigErrors) {
  // A constant negative curvature disk larger than the model's radius.
  RunConfig c = parse("metric.kind = const_neg\nmetric.R = 1\ndomain.kind = circle\ndomain.R = 1.5\n");
  EXPECT_THROW(with_manifold(c, [](const auto&) { return 0; }), ConfigError);
  c.domain.R = 0.5;
  EXPECT_EQ(with_manifold(c, [](const auto& mf) { return mf.domain.r_max(); }), 0.5);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"euclid.cfg", "cpc_r2.cfg", "cnc_r2_perturbed.cfg", "lens_k03.cfg", "equator.cfg"}) {
    const RunConfig c = load_config(std::string(GEOTOMO_CONFIGS) + "/" + name);
    EXPECT_NO_THROW(with_manifold(c, [](const auto&) { return 0; })) << name;
  }
}

TEST(Config, RandomPhantomUsesSeed) {
  RunConfig c = parse(base_config() + "phantom.random = true\nseed = 5\n");
  const auto a = phantom_params(c, kDisk);
  const auto b = phantom_params(c, kDisk);
  EXPECT_EQ(a.bumps[0].center.x, b.bumps[0].center.x);
  c.random_phantom = false;
  EXPECT_EQ(phantom_params(c, kDisk).bumps[0].center.x, default_smooth_phantom().bumps[0].center.x);
}
