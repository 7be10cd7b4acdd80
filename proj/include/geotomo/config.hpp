#pragma once

// Flat `key = value` run configuration with `#` comments.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "geotomo/fields.hpp"
#include "geotomo/geometry.hpp"

namespace geotomo {

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
  const char* tag() const noexcept override { return "config"; }
};

struct MetricConfig {
  std::string kind = "euclidean";  // euclidean | const_pos | const_neg | lens
  double R = 1.0;
  double k = 0.0;
  double sigma = 0.25;
  Vec2 center;
};

struct DomainConfig {
  std::string kind = "circle";  // circle | ellipse | perturbed
  double a = 1.0;
  double b = 0.0;
  double R = 1.0;
};

struct RunConfig {
  MetricConfig metric;
  DomainConfig domain;
  std::size_t n = 100;
  std::size_t n_theta = 0;  // 0: 2 n
  double dt = 1e-2;
  std::size_t max_steps = 0;  // 0: ceil(8 r_max / dt)
  std::size_t iterations = 0;
  std::string phantom = "smooth_bumps";
  bool random_phantom = false;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  std::size_t theta_count() const { return n_theta ? n_theta : 2 * n; }
  std::size_t step_budget(const StarShapedDomain& d) const {
    return max_steps ? max_steps : static_cast<std::size_t>(std::ceil(8.0 * d.r_max() / dt));
  }
};

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("duplicate key " + key);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("key " + key + ": cannot parse '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("key " + key + ": expected true or false");
}

}  // namespace detail

inline RunConfig config_from_key_values(const KeyValues& kv) {
  RunConfig c;
  for (const char* required : {"metric.kind", "domain.kind"})
    if (!kv.count(required)) throw ConfigError(std::string("missing required key ") + required);
  for (const auto& [key, value] : kv) {
    if (key == "metric.kind") c.metric.kind = value;
    else if (key == "metric.R") c.metric.R = detail::parse_number<double>(key, value);
    else if (key == "metric.k") c.metric.k = detail::parse_number<double>(key, value);
    else if (key == "metric.sigma") c.metric.sigma = detail::parse_number<double>(key, value);
    else if (key == "metric.center_x") c.metric.center.x = detail::parse_number<double>(key, value);
    else if (key == "metric.center_y") c.metric.center.y = detail::parse_number<double>(key, value);
    else if (key == "domain.kind") c.domain.kind = value;
    else if (key == "domain.a") c.domain.a = detail::parse_number<double>(key, value);
    else if (key == "domain.b") c.domain.b = detail::parse_number<double>(key, value);
    else if (key == "domain.R") c.domain.R = detail::parse_number<double>(key, value);
    else if (key == "grid.n") c.n = detail::parse_number<std::size_t>(key, value);
    else if (key == "grid.n_theta") c.n_theta = detail::parse_number<std::size_t>(key, value);
    else if (key == "solver.dt") c.dt = detail::parse_number<double>(key, value);
    else if (key == "solver.max_steps") c.max_steps = detail::parse_number<std::size_t>(key, value);
    else if (key == "solver.iterations") {
      const long long it = detail::parse_number<long long>(key, value);
      if (it < 0) throw ConfigError("solver.iterations must be >= 0");
      c.iterations = static_cast<std::size_t>(it);
    }
    else if (key == "phantom.kind") c.phantom = value;
    else if (key == "phantom.random") c.random_phantom = detail::parse_bool(key, value);
    else if (key == "io.out_dir") c.out_dir = value;
    else if (key == "seed") c.seed = detail::parse_number<std::uint64_t>(key, value);
    else if (key == "threads") c.threads = detail::parse_number<unsigned>(key, value);
    else throw ConfigError("unknown key " + key);
  }
  if (c.n < 8) throw ConfigError("grid.n must be >= 8");
  if (!(c.dt > 0.0)) throw ConfigError("solver.dt must be > 0");
  if (c.n_theta && (c.n_theta < 16 || c.n_theta % 4)) throw ConfigError("grid.n_theta must be >= 16 and a multiple of 4");
  if (c.phantom != "smooth_bumps" && c.phantom != "disc_pack") throw ConfigError("unknown phantom.kind " + c.phantom);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return config_from_key_values(parse_key_values(in));
}

inline StarShapedDomain make_domain(const DomainConfig& d) {
  try {
    if (d.kind == "circle") return StarShapedDomain::circle(d.R);
    if (d.kind == "ellipse") return StarShapedDomain::ellipse(d.a, d.b);
    if (d.kind == "perturbed") return StarShapedDomain::perturbed(d.a, d.b);
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown domain.kind " + d.kind);
}

inline IsothermalMetric make_metric(const MetricConfig& m) {
  if (m.kind == "euclidean") return Euclidean{};
  if (!(m.R > 0.0)) throw ConfigError("metric.R must be positive");
  if (m.kind == "const_pos") return ConstantPositive{m.R};
  if (m.kind == "const_neg") return ConstantNegative{m.R};
  if (m.kind == "lens") {
    if (!(m.sigma > 0.0)) throw ConfigError("metric.sigma must be positive");
    return Lens{m.k, m.sigma, m.center};
  }
  throw ConfigError("unknown metric.kind " + m.kind);
}

/// Calls fn(Manifold<M>) with the concrete metric type selected by the config.
template <class Fn>
decltype(auto) with_manifold(const RunConfig& c, Fn&& fn) {
  const StarShapedDomain d = make_domain(c.domain);
  return std::visit(
      [&](const auto& metric) -> decltype(auto) {
        using M = std::decay_t<decltype(metric)>;
        std::optional<Manifold<M>> mf;
        try {
          mf.emplace(metric, d);
        } catch (const UsageError& e) {
          throw ConfigError(e.what());
        }
        return fn(*mf);
      },
      make_metric(c.metric));
}

inline PhantomParams phantom_params(const RunConfig& c, const StarShapedDomain& d) {
  const PhantomKind kind = c.phantom == "disc_pack" ? PhantomKind::disc_pack : PhantomKind::smooth_bumps;
  if (c.random_phantom) return random_phantom(kind, d, c.seed);
  return kind == PhantomKind::disc_pack ? default_disc_pack() : default_smooth_phantom();
}

}  // namespace geotomo
