#pragma once

// JSON run configuration. One document per run; unknown keys are rejected and
// every diagnostic names the offending field (or line and column for syntax
// errors).

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dynareg/eit/reconstruction.hpp"
#include "dynareg/error.hpp"

namespace dynareg::experiment {

using nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Kind { static_rate, dyn_oracle_check, eit_recon, bench_scaling };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::static_rate: return "static-rate";
    case Kind::dyn_oracle_check: return "dyn-oracle-check";
    case Kind::eit_recon: return "eit-recon";
    case Kind::bench_scaling: return "bench-scaling";
  }
  return "?";
}

struct StaticRateParams {
  double mu = 0.5;
  std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
  double scale = 1.0;  // T = scale * delta^(-1/(2 mu + 1))
  int dimension = 200;
  double smallest_singular_value = 1e-4;
};

struct OracleCheckParams {
  int instances = 50;
  int max_dim = 8;
  int max_steps = 12;
  std::vector<double> alphas{1e-2, 1.0, 1e2};
};

struct BenchParams {
  std::vector<int> sizes{64, 128, 256, 512};
  int n = 32;
  int m = 32;
  int repetitions = 5;
};

struct RunConfig {
  Kind kind = Kind::static_rate;
  std::uint64_t seed = 0;
  std::string output;  // optional; the command line may supply it instead
  StaticRateParams static_rate;
  OracleCheckParams oracle;
  eit::ReconstructionSettings eit;
  BenchParams bench;

  /// Every parameter of the chosen kind with defaults filled in. The output
  /// directory is not part of it, so runs into different directories share
  /// manifests.
  json resolved() const;
};

namespace detail {

inline std::string field_error(const std::string& key, const std::string& msg) {
  return "config field '" + key + "': " + msg;
}

inline double read_double(const json& obj, const std::string& key,
                          double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(field_error(key, "expected a number"));
  return v.get<double>();
}

inline int read_int(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(field_error(key, "expected an integer"));
  }
  const auto x = v.get<std::int64_t>();
  if (x < -2147483647 || x > 2147483647) {
    throw ConfigError(field_error(key, "integer out of range"));
  }
  return static_cast<int>(x);
}

template <class T>
std::vector<T> read_list(const json& obj, const std::string& key,
                         std::vector<T> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(field_error(key, "expected an array"));
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& x = v[i];
    const std::string where = key + "[" + std::to_string(i) + "]";
    if constexpr (std::is_integral_v<T>) {
      if (!x.is_number_integer()) {
        throw ConfigError(field_error(where, "expected an integer"));
      }
    } else {
      if (!x.is_number()) throw ConfigError(field_error(where, "expected a number"));
    }
    out.push_back(x.get<T>());
  }
  return out;
}

inline void check(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(field_error(key, msg));
}

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& context) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(field_error(
          context.empty() ? item.key() : context + "." + item.key(),
          "unknown key"));
    }
  }
}

inline std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline eit::PhantomSpec read_phantom(const json& obj) {
  eit::PhantomSpec s;
  if (!obj.is_object()) throw ConfigError(field_error("phantom", "expected an object"));
  reject_unknown(obj,
                 {"fixed_center", "fixed_radius", "orbit_radius", "radius_start",
                  "radius_growth", "contrast"},
                 "phantom");
  if (obj.contains("fixed_center")) {
    const auto c = read_list<double>(obj, "fixed_center", {});
    check(c.size() == 2, "phantom.fixed_center", "expected [x, y]");
    s.fixed_center = eit::Point(c[0], c[1]);
  }
  s.fixed_radius = read_double(obj, "fixed_radius", s.fixed_radius);
  s.orbit_radius = read_double(obj, "orbit_radius", s.orbit_radius);
  s.radius_start = read_double(obj, "radius_start", s.radius_start);
  s.radius_growth = read_double(obj, "radius_growth", s.radius_growth);
  s.contrast = read_double(obj, "contrast", s.contrast);
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(field_error("phantom", e.what()));
  }
  return s;
}

}  // namespace detail

inline RunConfig config_from_json(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  if (!doc.contains("kind") || !doc.at("kind").is_string()) {
    throw ConfigError(field_error("kind", "missing or not a string"));
  }
  RunConfig c;
  const std::string kind = doc.at("kind").get<std::string>();
  std::set<std::string> allowed{"kind", "seed", "output"};
  if (kind == "static-rate") {
    c.kind = Kind::static_rate;
    allowed.insert({"mu", "deltas", "scale", "dimension",
                    "smallest_singular_value"});
  } else if (kind == "dyn-oracle-check") {
    c.kind = Kind::dyn_oracle_check;
    allowed.insert({"instances", "max_dim", "max_steps", "alphas"});
  } else if (kind == "eit-recon") {
    c.kind = Kind::eit_recon;
    allowed.insert({"n_rings", "n_steps", "noise_pct", "mode", "alpha",
                    "phantom"});
  } else if (kind == "bench-scaling") {
    c.kind = Kind::bench_scaling;
    allowed.insert({"sizes", "n", "m", "repetitions"});
  } else {
    throw ConfigError(field_error(
        "kind", "'" + kind +
                    "' is not one of static-rate, dyn-oracle-check, eit-recon, "
                    "bench-scaling"));
  }
  reject_unknown(doc, allowed, "");

  // Every kind draws random numbers, so the seed is always required.
  if (!doc.contains("seed")) throw ConfigError(field_error("seed", "missing"));
  if (!doc.at("seed").is_number_unsigned()) {
    throw ConfigError(field_error("seed", "expected a nonnegative integer"));
  }
  c.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("output")) {
    check(doc.at("output").is_string(), "output", "expected a string");
    c.output = doc.at("output").get<std::string>();
  }

  switch (c.kind) {
    case Kind::static_rate: {
      auto& s = c.static_rate;
      s.mu = read_double(doc, "mu", s.mu);
      s.deltas = read_list<double>(doc, "deltas", s.deltas);
      s.scale = read_double(doc, "scale", s.scale);
      s.dimension = read_int(doc, "dimension", s.dimension);
      s.smallest_singular_value =
          read_double(doc, "smallest_singular_value", s.smallest_singular_value);
      check(s.mu > 0.0, "mu", "must be > 0");
      check(s.scale > 0.0, "scale", "must be > 0");
      check(s.deltas.size() >= 4, "deltas", "need at least 4 noise levels");
      for (double d : s.deltas) check(d > 0.0, "deltas", "levels must be > 0");
      check(s.dimension >= 2, "dimension", "must be >= 2");
      check(s.smallest_singular_value > 0.0 && s.smallest_singular_value < 1.0,
            "smallest_singular_value", "must lie in (0, 1)");
      break;
    }
    case Kind::dyn_oracle_check: {
      auto& o = c.oracle;
      o.instances = read_int(doc, "instances", o.instances);
      o.max_dim = read_int(doc, "max_dim", o.max_dim);
      o.max_steps = read_int(doc, "max_steps", o.max_steps);
      o.alphas = read_list<double>(doc, "alphas", o.alphas);
      check(o.instances >= 1, "instances", "must be >= 1");
      check(o.max_dim >= 1, "max_dim", "must be >= 1");
      check(o.max_steps >= 1, "max_steps", "must be >= 1");
      check(static_cast<Index>(o.max_dim) * o.max_steps <= kDefaultOracleCap,
            "max_steps", "max_dim * max_steps exceeds the oracle cap");
      check(!o.alphas.empty(), "alphas", "must not be empty");
      for (double a : o.alphas) check(a > 0.0, "alphas", "values must be > 0");
      break;
    }
    case Kind::eit_recon: {
      auto& e = c.eit;
      e.n_rings = read_int(doc, "n_rings", e.n_rings);
      e.n_steps = read_int(doc, "n_steps", e.n_steps);
      e.noise_pct = read_double(doc, "noise_pct", e.noise_pct);
      e.alpha = read_double(doc, "alpha", e.alpha);
      if (doc.contains("mode")) {
        const json& m = doc.at("mode");
        check(m.is_string(), "mode", "expected a string");
        const auto mode = m.get<std::string>();
        if (mode == "linear") {
          e.mode = eit::DataMode::linear;
        } else if (mode == "nonlinear") {
          e.mode = eit::DataMode::nonlinear;
        } else {
          check(false, "mode", "must be 'linear' or 'nonlinear'");
        }
      }
      if (doc.contains("phantom")) e.phantom = read_phantom(doc.at("phantom"));
      check(e.n_rings >= 2 && e.n_rings <= 40, "n_rings", "must lie in [2, 40]");
      check(e.n_steps >= 1, "n_steps", "must be >= 1");
      check(e.noise_pct >= 0.0, "noise_pct", "must be >= 0");
      check(e.alpha > 0.0, "alpha", "must be > 0");
      e.seed = c.seed;
      break;
    }
    case Kind::bench_scaling: {
      auto& b = c.bench;
      b.sizes = read_list<int>(doc, "sizes", b.sizes);
      b.n = read_int(doc, "n", b.n);
      b.m = read_int(doc, "m", b.m);
      b.repetitions = read_int(doc, "repetitions", b.repetitions);
      check(b.sizes.size() >= 3, "sizes", "need at least 3 sizes");
      for (std::size_t i = 0; i < b.sizes.size(); ++i) {
        check(b.sizes[i] >= 1, "sizes", "sizes must be >= 1");
        check(i == 0 || b.sizes[i] > b.sizes[i - 1], "sizes",
              "must be strictly increasing");
      }
      check(b.n >= 1, "n", "must be >= 1");
      check(b.m >= 1, "m", "must be >= 1");
      check(b.repetitions >= 3, "repetitions", "must be >= 3");
      break;
    }
  }
  return c;
}

inline RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("config syntax error at " +
                      detail::line_column(text, e.byte) + ": " + e.what());
  }
  return config_from_json(doc);
}

inline json RunConfig::resolved() const {
  json j;
  j["kind"] = kind_name(kind);
  j["seed"] = seed;
  switch (kind) {
    case Kind::static_rate:
      j["mu"] = static_rate.mu;
      j["deltas"] = static_rate.deltas;
      j["scale"] = static_rate.scale;
      j["dimension"] = static_rate.dimension;
      j["smallest_singular_value"] = static_rate.smallest_singular_value;
      break;
    case Kind::dyn_oracle_check:
      j["instances"] = oracle.instances;
      j["max_dim"] = oracle.max_dim;
      j["max_steps"] = oracle.max_steps;
      j["alphas"] = oracle.alphas;
      break;
    case Kind::eit_recon: {
      j["n_rings"] = eit.n_rings;
      j["n_steps"] = eit.n_steps;
      j["noise_pct"] = eit.noise_pct;
      j["mode"] = eit.mode == eit::DataMode::linear ? "linear" : "nonlinear";
      j["alpha"] = eit.alpha;
      const auto& p = eit.phantom;
      j["phantom"] = {{"fixed_center", {p.fixed_center.x(), p.fixed_center.y()}},
                      {"fixed_radius", p.fixed_radius},
                      {"orbit_radius", p.orbit_radius},
                      {"radius_start", p.radius_start},
                      {"radius_growth", p.radius_growth},
                      {"contrast", p.contrast}};
      break;
    }
    case Kind::bench_scaling:
      j["sizes"] = bench.sizes;
      j["n"] = bench.n;
      j["m"] = bench.m;
      j["repetitions"] = bench.repetitions;
      break;
  }
  return j;
}

}  // namespace dynareg::experiment
