// geotomo: command line front end for the geodesic tomography library.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "geotomo/config.hpp"
#include "geotomo/experiments.hpp"
#include "geotomo/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace geotomo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitTrapped = 3;

struct Common {
  std::string config_path;
  std::string out_dir;
  int threads = -1;
  bool pgm = false;
};

/// Collects everything written so the manifest can list it.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  std::string path(const std::string& name) {
    const fs::path p = root_ / name;
    fs::create_directories(p.parent_path());
    files_.push_back(name);
    return p.string();
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

RunConfig load(const Common& c, bool required) {
  RunConfig cfg;
  if (!c.config_path.empty())
    cfg = load_config(c.config_path);
  else if (required)
    throw ConfigError("this command needs --config FILE");
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  if (c.threads >= 0) cfg.threads = static_cast<unsigned>(c.threads);
  set_thread_count(cfg.threads);
  return cfg;
}

void write_json(const std::string& path, const json& j) {
  auto out = io::open_out(path);
  out << j.dump(2) << '\n';
}

json metrics_json(const std::string& experiment, const ReconstructionReport& rep) {
  json iters = json::array();
  for (std::size_t k = 0; k < rep.data_error.size(); ++k) {
    json row;
    row["iteration"] = k;
    row["rel_l2_field"] = rep.field_error[k] ? json(*rep.field_error[k]) : json(nullptr);
    row["rel_l2_data"] = rep.data_error[k];
    iters.push_back(row);
  }
  return {{"experiment", experiment}, {"iterations", iters}};
}

Formula parse_formula(const std::string& s) { return s == "hrc" ? Formula::hrc : Formula::frc; }

// Subcommands -----------------------------------------------------------------

int cmd_phantom(const Common& common) {
  const RunConfig cfg = load(common, true);
  const StarShapedDomain d = make_domain(cfg.domain);
  const Phantom ph = make_phantom(phantom_params(cfg, d), GridSpec{cfg.n, d.r_max()}, d);
  for (const auto& w : ph.warnings) std::cerr << "warning: " << w << '\n';
  OutputDir out(cfg.out_dir);
  io::write_grid(out.path("phantom.csv"), ph.grid);
  if (common.pgm) io::write_pgm(out.path("phantom.pgm"), ph.grid);
  return kExitOk;
}

int cmd_geodesics(const Common& common, std::size_t count, std::optional<double> beta) {
  const RunConfig cfg = load(common, true);
  if (count == 0) throw UsageError("--count must be positive");
  return with_manifold(cfg, [&](const auto& mf) {
    // Default launch point: the leftmost boundary point.
    const double b = beta.value_or(kPi);
    const std::size_t max_steps = cfg.step_budget(mf.domain);
    OutputDir out(cfg.out_dir);
    std::vector<io::PathIndexRow> rows;
    for (std::size_t q = 0; q < count; ++q) {
      const InfluxCoord c{wrap_two_pi(b), -kHalfPi + kPi * (static_cast<double>(q) + 0.5) / static_cast<double>(count)};
      const GeodesicPath p = trace_from_influx(mf, c, cfg.dt, max_steps);
      char name[48];
      std::snprintf(name, sizeof name, "geodesics/path_%04zu.csv", q);
      auto f = io::open_out(out.path(name));
      io::write_path(f, p);
      rows.push_back({c, p.tau, p.exit_point});
    }
    auto f = io::open_out(out.path("geodesics/index.csv"));
    io::write_path_index(f, rows);
    return kExitOk;
  });
}

int cmd_forward(const Common& common, const std::string& transform, bool prepped) {
  const RunConfig cfg = load(common, true);
  return with_manifold(cfg, [&](const auto& mf) {
    const Formula formula = transform == "i1" ? Formula::hrc : Formula::frc;
    const Phantom ph = make_phantom(phantom_params(cfg, mf.domain), GridSpec{cfg.n, mf.domain.r_max()}, mf.domain);
    const FanBeamData data =
        synthesize_data(mf, ph, formula, build_influx_grid(cfg.n), cfg.dt, cfg.step_budget(mf.domain));
    OutputDir out(cfg.out_dir);
    io::write_fanbeam(out.path("fanbeam_" + transform + ".csv"), data);
    if (prepped) io::write_fanbeam(out.path("fanbeam_" + transform + "_prepped.csv"), prep(data, formula), true);
    return kExitOk;
  });
}

int cmd_invert(const Common& common, const std::string& formula_name, std::optional<std::size_t> iterations,
               const std::string& data_path) {
  RunConfig cfg = load(common, true);
  if (iterations) cfg.iterations = *iterations;
  return with_manifold(cfg, [&](const auto& mf) {
    const Formula formula = parse_formula(formula_name);
    const std::size_t max_steps = cfg.step_budget(mf.domain);
    const GridSpec spec{cfg.n, mf.domain.r_max()};
    std::optional<Phantom> ph;
    std::optional<FanBeamData> data;
    if (data_path.empty()) {
      ph.emplace(make_phantom(phantom_params(cfg, mf.domain), spec, mf.domain));
      data.emplace(synthesize_data(mf, *ph, formula, build_influx_grid(cfg.n), cfg.dt, max_steps));
    } else {
      data.emplace(io::read_fanbeam(data_path));
    }
    const BasepointTable table = precompute_basepoints(mf, spec, cfg.theta_count(), cfg.dt, max_steps);
    const ReconstructionReport rep =
        neumann_invert(*data, formula, cfg.iterations, mf, table, cfg.dt, ph ? &ph->grid : nullptr);
    OutputDir out(cfg.out_dir);
    io::write_grid(out.path("reconstruction.csv"), rep.result);
    write_json(out.path("metrics.json"), metrics_json("invert-" + formula_name, rep));
    if (common.pgm) io::write_pgm(out.path("reconstruction.pgm"), rep.result);
    if (ph) {
      ScalarGrid err = rep.result;
      err -= ph->grid;
      io::write_grid(out.path("error.csv"), err);
      if (common.pgm) io::write_pgm(out.path("error.pgm"), err);
    }
    if (rep.aborted) {
      std::cerr << "error=trapped-geodesic message=\"" << rep.abort_reason << "\"\n";
      return kExitTrapped;
    }
    return kExitOk;
  });
}

std::vector<double> k_ladder(double k_min, double k_max, std::size_t steps) {
  if (steps < 1 || !(k_max >= k_min) || !(k_min >= 0.0)) throw UsageError("need 0 <= k-min <= k-max and k-steps >= 1");
  std::vector<double> ks;
  for (std::size_t i = 0; i < steps; ++i)
    ks.push_back(steps == 1 ? k_min : k_min + (k_max - k_min) * static_cast<double>(i) / static_cast<double>(steps - 1));
  return ks;
}

void write_sweep(const std::string& path, const std::vector<TerminatorSample>& sweep) {
  auto f = io::open_out(path);
  f << "k,beta_ter\n";
  for (const auto& s : sweep) f << io::num(s.k) << ',' << io::num(s.beta_ter.value) << '\n';
}

int cmd_terminator(const Common& common, double k_min, double k_max, std::size_t k_steps,
                   const TerminatorOptions& opt) {
  const RunConfig cfg = load(common, false);
  const StarShapedDomain d = common.config_path.empty() ? StarShapedDomain::circle(1.0) : make_domain(cfg.domain);
  const double sigma = common.config_path.empty() ? 0.25 : cfg.metric.sigma;
  const auto sweep = terminator_sweep(k_ladder(k_min, k_max, k_steps), sigma, d, opt);
  OutputDir out(cfg.out_dir);
  write_sweep(out.path("terminator.csv"), sweep);
  return kExitOk;
}

int cmd_simplicity(const Common& common, double beta_c, const TerminatorOptions& opt) {
  const RunConfig cfg = load(common, true);
  return with_manifold(cfg, [&](const auto& mf) {
    const std::size_t max_steps = cfg.step_budget(mf.domain);
    const bool free = is_beta_free(mf, beta_c, opt.n_beta, opt.n_alpha, cfg.dt, max_steps);
    const InfluxGrid g{opt.n_beta, opt.n_alpha};
    std::vector<std::vector<io::ConjugateRow>> per_ray(g.size());
    parallel_for(g.size(), [&](std::size_t idx) {
      const InfluxCoord c = g.node(idx / g.n_alpha, idx % g.n_alpha);
      const auto [path, jt] = trace_jacobi(mf, influx_start(mf.domain, c), beta_c, cfg.dt, max_steps);
      for (const auto& p : conjugate_points(jt, path)) per_ray[idx].push_back({c, p});
    });
    std::vector<io::ConjugateRow> rows;
    for (auto& r : per_ray) rows.insert(rows.end(), r.begin(), r.end());
    OutputDir out(cfg.out_dir);
    auto f = io::open_out(out.path("conjugate_points.csv"));
    io::write_conjugates(f, rows);
    write_json(out.path("simplicity.json"), json{{"beta", beta_c}, {"beta_free", free}});
    std::cout << (free ? "true" : "false") << '\n';
    return kExitOk;
  });
}

// reproduce -------------------------------------------------------------------

json run_case(const ExperimentCase& ec, OutputDir& out, bool pgm) {
  return with_manifold(ec.config, [&](const auto& mf) {
    InversionSetup s;
    s.n = ec.config.n;
    s.formula = ec.formula;
    s.iterations = ec.config.iterations;
    s.phantom = ec.phantom ? *ec.phantom : phantom_params(ec.config, mf.domain);
    const InversionOutcome res = run_inversion(mf, s);
    const ReconstructionReport& rep = res.report;
    const std::string stem = ec.label + "/";
    io::write_grid(out.path(stem + "reconstruction.csv"), rep.result);
    const ScalarGrid err = res.pointwise_error();
    io::write_grid(out.path(stem + "error.csv"), err);
    write_json(out.path(stem + "metrics.json"), metrics_json(ec.label, rep));
    if (pgm) {
      io::write_pgm(out.path(stem + "reconstruction.pgm"), rep.result);
      io::write_pgm(out.path(stem + "error.pgm"), err);
    }
    json summary{{"label", ec.label},
                 {"formula", ec.formula == Formula::frc ? "frc" : "hrc"},
                 {"iterations", rep.data_error.size() - 1},
                 {"rel_l2_field", rep.field_error.back() ? json(*rep.field_error.back()) : json(nullptr)},
                 {"rel_l2_data", rep.data_error.back()},
                 {"aborted", rep.aborted}};
    if (ec.reference_error) summary["reference_rel_l2"] = *ec.reference_error;
    if (ec.label == "const_pos_R1_ellipse") {
      const double left = band_median(err, [](Vec2 p) { return p.x < -0.6; });
      const double centre = band_median(err, [](Vec2 p) { return std::abs(p.x) < 0.3; });
      summary["median_error_left_band"] = left;
      summary["median_error_central_band"] = centre;
    }
    return summary;
  });
}

int cmd_reproduce(const Common& common, const std::string& experiment, std::size_t n) {
  const RunConfig cfg = load(common, false);
  OutputDir out(fs::path(cfg.out_dir) / experiment);
  json manifest{{"experiment", experiment}};
  if (experiment == "terminator-sweep") {
    const auto sweep = terminator_sweep(k_ladder(0.1, 1.3, 13), 0.25, StarShapedDomain::circle(1.0));
    write_sweep(out.path("terminator.csv"), sweep);
    const auto crossing = simplicity_crossing(sweep);
    manifest["headline"] = {{"k_crossing", crossing ? json(*crossing) : json(nullptr)}};
  } else {
    json cases = json::array();
    bool aborted = false;
    for (const auto& ec : experiment_cases(experiment, n)) {
      cases.push_back(run_case(ec, out, common.pgm));
      aborted = aborted || cases.back()["aborted"].get<bool>();
    }
    manifest["n"] = n;
    manifest["headline"] = cases;
    if (aborted) manifest["aborted"] = true;
  }
  json files = out.files();
  files.push_back("manifest.json");
  manifest["files"] = files;
  write_json((out.root() / "manifest.json").string(), manifest);
  return kExitOk;
}

void report(const char* tag, const std::string& message) {
  std::string m = message;
  for (char& ch : m)
    if (ch == '"' || ch == '\n') ch = '\'';
  std::cerr << "error=" << tag << " message=\"" << m << "\"\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic X-ray transforms and their inversion on isotropic surfaces", "geotomo"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "run configuration (key = value)");
  app.add_option("--out", common.out_dir, "output directory, overrides io.out_dir");
  app.add_option("--threads", common.threads, "worker threads, 0 = all available");
  app.add_flag("--pgm", common.pgm, "also write PGM renderings of grids");

  TerminatorOptions topt;
  auto add_grid_opts = [&topt](CLI::App* sub) {
    sub->add_option("--n-beta", topt.n_beta, "influx grid size in beta")->check(CLI::Range(16, 1 << 20));
    sub->add_option("--n-alpha", topt.n_alpha, "influx grid size in alpha")->check(CLI::Range(16, 1 << 20));
  };

  auto* phantom = app.add_subcommand("phantom", "render the configured phantom on the grid");

  auto* geodesics = app.add_subcommand("geodesics", "dump geodesics fanned out from one boundary point");
  std::size_t count = 40;
  std::optional<double> launch_beta;
  geodesics->add_option("--count", count, "number of geodesics");
  geodesics->add_option("--beta", launch_beta, "boundary parameter of the launch point (default pi)");

  auto* forward = app.add_subcommand("forward", "fan-beam data of the configured phantom");
  std::string transform = "i0";
  bool prepped = false;
  forward->add_option("--transform", transform, "i0 or i1")->check(CLI::IsMember({"i0", "i1"}));
  forward->add_flag("--prepped", prepped, "also write the data after extension and Hilbert transform");

  auto* invert = app.add_subcommand("invert", "reconstruct from fan-beam data");
  std::string formula = "frc";
  std::optional<std::size_t> iterations;
  std::string data_path;
  invert->add_option("--formula", formula, "frc or hrc")->check(CLI::IsMember({"frc", "hrc"}));
  invert->add_option("--iterations", iterations, "Neumann iterations, overrides solver.iterations");
  invert->add_option("--data", data_path, "fan-beam CSV; synthesized from the phantom when absent");

  auto* term = app.add_subcommand("terminator", "terminator constant over a sweep of centered lenses");
  double k_min = 0.1;
  double k_max = 1.3;
  std::size_t k_steps = 13;
  term->add_option("--k-min", k_min, "smallest lens strength");
  term->add_option("--k-max", k_max, "largest lens strength");
  term->add_option("--k-steps", k_steps, "number of strengths");
  add_grid_opts(term);

  auto* simp = app.add_subcommand("simplicity", "test for beta-conjugate points and list them");
  double beta_c = 1.0;
  simp->add_option("--beta", beta_c, "curvature multiplier beta")->check(CLI::NonNegativeNumber);
  add_grid_opts(simp);

  auto* repro = app.add_subcommand("reproduce", "run a named experiment and write a manifest");
  std::string experiment;
  std::size_t n = 100;
  repro
      ->add_option("--experiment", experiment, "experiment name")
      ->required()
      ->check(CLI::IsMember({"cpc", "cnc", "nonsimple-equator", "exp1", "exp2", "exp3", "terminator-sweep"}));
  repro->add_option("--n", n, "grid size")->check(CLI::Range(8, 4096));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << app.help();
    report("usage", e.what());
    return kExitUsage;
  }

  try {
    if (phantom->parsed()) return cmd_phantom(common);
    if (geodesics->parsed()) return cmd_geodesics(common, count, launch_beta);
    if (forward->parsed()) return cmd_forward(common, transform, prepped);
    if (invert->parsed()) return cmd_invert(common, formula, iterations, data_path);
    if (term->parsed()) return cmd_terminator(common, k_min, k_max, k_steps, topt);
    if (simp->parsed()) return cmd_simplicity(common, beta_c, topt);
    if (repro->parsed()) return cmd_reproduce(common, experiment, n);
  } catch (const TrappedGeodesic& e) {
    report(e.tag(), e.what());
    return kExitTrapped;
  } catch (const NotApplicable& e) {
    report(e.tag(), e.what());
    return kExitTrapped;
  } catch (const UsageError& e) {
    report(e.tag(), e.what());
    return kExitUsage;
  } catch (const Error& e) {
    report(e.tag(), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    report("error", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
