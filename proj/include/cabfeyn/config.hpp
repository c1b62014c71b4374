#pragma once

// Run configuration: a single JSON object. Unknown keys are rejected at
// every level and every error names the offending key.

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cabfeyn/camb_hilbert.hpp"
#include "cabfeyn/error.hpp"
#include "cabfeyn/fresnel.hpp"
#include "cabfeyn/operator_engine.hpp"
#include "cabfeyn/scale_functions.hpp"

namespace cabfeyn {

using json = nlohmann::json;

struct ScaleSpec {
  std::string preset = "drifted";  // wiener | drifted
  double alpha = 0.3;
  double beta = 0.5;
  double T = 1.0;
  int grid_n = default_grid_n;
};

struct FunctionalSpec {
  std::string name = "one";  // one | F1 | F2 | F3 | F4
  std::string w0 = "monomial:1";
  double m = 0.0;
  double sigma2 = 1.0;
  std::vector<std::pair<double, cplx>> eta_atoms;  // F1 only; empty = Gaussian(m, sigma2)
};

struct PsiSpec {
  std::string preset = "gaussian";  // gaussian | standard_gaussian | counterexample | bump
  double center = 0.0;
  double sigma = 1.0;
  double amplitude = 1.0;
  double kappa = 0.0;
  double radius = 1.0;
};

struct XiGrid {
  double min = -2.0;
  double max = 2.0;
  int count = 5;
};

struct RunConfig {
  ScaleSpec scale;
  std::string h = "b";
  FunctionalSpec functional;
  PsiSpec psi;
  std::vector<cplx> lambda{cplx(1.0, 0.0)};
  std::optional<double> q;
  double q0 = 0.5;
  std::optional<double> delta;
  std::size_t n_paths = 100000;
  int path_steps = default_path_steps;
  std::uint64_t seed = 1;
  XiGrid xi_grid;
  std::optional<std::string> output_dir;
  int converge_terms = 10;
  std::vector<double> radii{5.0, 10.0, 20.0, 40.0};
};

namespace detail {

inline Error config_error(const std::string& key, const std::string& msg) {
  return Error(ErrorKind::ConfigError, "key '" + key + "': " + msg);
}

inline void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw config_error(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw config_error(where.empty() ? k : where + "." + k, "unknown key");
}

template <class T>
void read(const json& j, const std::string& key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw config_error(path, std::string("bad value: ") + e.what());
  }
}

inline cplx read_complex(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_object()) {
    reject_unknown(v, path, {"re", "im"});
    double re = 0.0, im = 0.0;
    read(v, "re", path + ".re", re);
    read(v, "im", path + ".im", im);
    return {re, im};
  }
  throw config_error(path, "expected a number or {re, im}");
}

inline json write_complex(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return json{{"re", z.real()}, {"im", z.imag()}};
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  json j;
  j["scale"] = {{"preset", c.scale.preset},
                {"alpha", c.scale.alpha},
                {"beta", c.scale.beta},
                {"T", c.scale.T},
                {"grid_n", c.scale.grid_n}};
  j["h"] = c.h;
  json f = {{"name", c.functional.name}, {"w0", c.functional.w0}, {"m", c.functional.m},
            {"sigma2", c.functional.sigma2}};
  if (!c.functional.eta_atoms.empty()) {
    json pts = json::array();
    for (const auto& [v, w] : c.functional.eta_atoms) pts.push_back({{"v", v}, {"weight", detail::write_complex(w)}});
    f["eta_atoms"] = pts;
  }
  j["functional"] = f;
  j["psi"] = {{"preset", c.psi.preset}, {"center", c.psi.center}, {"sigma", c.psi.sigma},
              {"amplitude", c.psi.amplitude}, {"kappa", c.psi.kappa}, {"radius", c.psi.radius}};
  json lam = json::array();
  for (const auto& l : c.lambda) lam.push_back(detail::write_complex(l));
  j["lambda"] = lam;
  if (c.q) j["q"] = *c.q;
  j["q0"] = c.q0;
  if (c.delta) j["delta"] = *c.delta;
  j["n_paths"] = c.n_paths;
  j["path_steps"] = c.path_steps;
  j["seed"] = c.seed;
  j["xi_grid"] = {{"min", c.xi_grid.min}, {"max", c.xi_grid.max}, {"count", c.xi_grid.count}};
  if (c.output_dir) j["output_dir"] = *c.output_dir;
  j["converge_terms"] = c.converge_terms;
  j["radii"] = c.radii;
  return j;
}

/// Structural checks that do not need any engine object.
inline void check_config(const RunConfig& c) {
  using detail::config_error;
  if (c.scale.preset != "wiener" && c.scale.preset != "drifted")
    throw config_error("scale.preset", "unknown preset '" + c.scale.preset + "'");
  if (!(c.scale.T > 0.0)) throw config_error("scale.T", "must be positive");
  if (c.scale.grid_n < 2) throw config_error("scale.grid_n", "must be >= 2");
  static const std::set<std::string> fnames{"one", "F1", "F2", "F3", "F4"};
  if (!fnames.count(c.functional.name))
    throw config_error("functional.name", "unknown functional '" + c.functional.name + "'");
  static const std::set<std::string> pnames{"gaussian", "standard_gaussian", "counterexample", "bump"};
  if (!pnames.count(c.psi.preset)) throw config_error("psi.preset", "unknown preset '" + c.psi.preset + "'");
  if (!(c.q0 > 0.0)) throw config_error("q0", "must be positive");
  if (c.delta && !(*c.delta > 0.0)) throw config_error("delta", "must be positive");
  if (c.q && *c.q == 0.0) throw config_error("q", "must be nonzero");
  if (c.xi_grid.count < 1) throw config_error("xi_grid.count", "must be >= 1");
  if (c.xi_grid.count > 1 && !(c.xi_grid.max > c.xi_grid.min))
    throw config_error("xi_grid.max", "must exceed xi_grid.min");
  if (c.path_steps < 1) throw config_error("path_steps", "must be >= 1");
  if (c.converge_terms < 1) throw config_error("converge_terms", "must be >= 1");
  for (const auto& l : c.lambda)
    if (l == cplx(0.0, 0.0)) throw config_error("lambda", "entries must be nonzero");
}

inline RunConfig config_from_json(const json& j) {
  using detail::read;
  detail::reject_unknown(j, "",
                         {"scale", "h", "functional", "psi", "lambda", "q", "q0", "delta", "n_paths", "path_steps",
                          "seed", "xi_grid", "output_dir", "converge_terms", "radii"});
  RunConfig c;
  if (j.contains("scale")) {
    const auto& s = j["scale"];
    detail::reject_unknown(s, "scale", {"preset", "alpha", "beta", "T", "grid_n"});
    read(s, "preset", "scale.preset", c.scale.preset);
    read(s, "alpha", "scale.alpha", c.scale.alpha);
    read(s, "beta", "scale.beta", c.scale.beta);
    read(s, "T", "scale.T", c.scale.T);
    read(s, "grid_n", "scale.grid_n", c.scale.grid_n);
  }
  read(j, "h", "h", c.h);
  if (j.contains("functional")) {
    const auto& f = j["functional"];
    detail::reject_unknown(f, "functional", {"name", "w0", "m", "sigma2", "eta_atoms"});
    read(f, "name", "functional.name", c.functional.name);
    read(f, "w0", "functional.w0", c.functional.w0);
    read(f, "m", "functional.m", c.functional.m);
    read(f, "sigma2", "functional.sigma2", c.functional.sigma2);
    if (f.contains("eta_atoms")) {
      if (!f["eta_atoms"].is_array()) throw detail::config_error("functional.eta_atoms", "expected an array");
      for (std::size_t i = 0; i < f["eta_atoms"].size(); ++i) {
        const auto& p = f["eta_atoms"][i];
        const std::string path = "functional.eta_atoms[" + std::to_string(i) + "]";
        detail::reject_unknown(p, path, {"v", "weight"});
        double v = 0.0;
        read(p, "v", path + ".v", v);
        const cplx w = p.contains("weight") ? detail::read_complex(p["weight"], path + ".weight") : cplx(1.0);
        c.functional.eta_atoms.emplace_back(v, w);
      }
    }
  }
  if (j.contains("psi")) {
    const auto& p = j["psi"];
    detail::reject_unknown(p, "psi", {"preset", "center", "sigma", "amplitude", "kappa", "radius"});
    read(p, "preset", "psi.preset", c.psi.preset);
    read(p, "center", "psi.center", c.psi.center);
    read(p, "sigma", "psi.sigma", c.psi.sigma);
    read(p, "amplitude", "psi.amplitude", c.psi.amplitude);
    read(p, "kappa", "psi.kappa", c.psi.kappa);
    read(p, "radius", "psi.radius", c.psi.radius);
  }
  if (j.contains("lambda")) {
    const auto& l = j["lambda"];
    c.lambda.clear();
    if (l.is_array()) {
      for (std::size_t i = 0; i < l.size(); ++i)
        c.lambda.push_back(detail::read_complex(l[i], "lambda[" + std::to_string(i) + "]"));
    } else {
      c.lambda.push_back(detail::read_complex(l, "lambda"));
    }
  }
  if (j.contains("q")) {
    double q = 0.0;
    read(j, "q", "q", q);
    c.q = q;
  }
  read(j, "q0", "q0", c.q0);
  if (j.contains("delta")) {
    double d = 0.0;
    read(j, "delta", "delta", d);
    c.delta = d;
  }
  read(j, "n_paths", "n_paths", c.n_paths);
  read(j, "path_steps", "path_steps", c.path_steps);
  read(j, "seed", "seed", c.seed);
  if (j.contains("xi_grid")) {
    const auto& x = j["xi_grid"];
    detail::reject_unknown(x, "xi_grid", {"min", "max", "count"});
    read(x, "min", "xi_grid.min", c.xi_grid.min);
    read(x, "max", "xi_grid.max", c.xi_grid.max);
    read(x, "count", "xi_grid.count", c.xi_grid.count);
  }
  if (j.contains("output_dir")) {
    std::string d;
    read(j, "output_dir", "output_dir", d);
    c.output_dir = d;
  }
  read(j, "converge_terms", "converge_terms", c.converge_terms);
  read(j, "radii", "radii", c.radii);
  check_config(c);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Engine objects named by a config

inline ScalePairPtr build_scale(const RunConfig& c) {
  if (c.scale.preset == "wiener") return wiener_preset(c.scale.T, c.scale.grid_n);
  return drifted_preset(c.scale.alpha, c.scale.beta, c.scale.T, c.scale.grid_n);
}

inline CambElement build_direction(const ScalePairPtr& sp, const std::string& name, const std::string& key) {
  try {
    return direction_preset(sp, name);
  } catch (const Error& e) {
    throw detail::config_error(key, e.what());
  }
}

inline FresnelFunctional build_functional(const RunConfig& c, const ScalePairPtr& sp) {
  GalleryParams p;
  const auto& f = c.functional;
  if (f.name == "F1" || f.name == "F2") p.w0 = build_direction(sp, f.w0, "functional.w0");
  p.m = f.m;
  p.sigma2 = f.sigma2;
  if (f.name == "F1") {
    if (f.eta_atoms.empty())
      p.eta = GaussianEta{f.m, f.sigma2};
    else
      p.eta = Atoms1D{f.eta_atoms};
  }
  try {
    return gallery(f.name, sp, p);
  } catch (const Error& e) {
    throw detail::config_error("functional", e.what());
  }
}

inline PsiFn build_psi(const RunConfig& c, const KernelContext& ctx) {
  const auto& p = c.psi;
  try {
    if (p.preset == "standard_gaussian") return standard_gaussian_psi();
    if (p.preset == "gaussian") return gaussian_psi(p.center, p.sigma, p.amplitude, p.kappa);
    if (p.preset == "bump") return bump_psi(p.center, p.radius);
    return counterexample_psi(ctx.h_dot_a);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::BadConfig) throw;
    throw detail::config_error("psi", e.what());
  }
}

inline std::vector<double> build_xi(const RunConfig& c) {
  return linspace(c.xi_grid.min, c.xi_grid.max, c.xi_grid.count);
}

}  // namespace cabfeyn
