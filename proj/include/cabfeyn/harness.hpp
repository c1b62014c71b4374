#pragma once

// Subcommand backends for the command-line runner. Each writes CSV files
// and a JSON manifest into the output directory and returns an exit code.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cabfeyn/config.hpp"
#include "cabfeyn/error.hpp"
#include "cabfeyn/gbmp_sampler.hpp"
#include "cabfeyn/operator_engine.hpp"

namespace cabfeyn::harness {

namespace fs = std::filesystem;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"validate", "sample",   "evaluate", "converge",
                                          "bounds",   "counterexample", "selftest", "report"};
  return s;
}

/// One-line help text per subcommand.
inline std::string describe(const std::string& sub) {
  static const std::map<std::string, std::string> d{
      {"validate", "check the scale pair and write validate.csv"},
      {"sample", "sample GBMP paths and compare PWZ moments with their targets"},
      {"evaluate", "evaluate the operator by kernel quadrature and, for real lambda, Monte Carlo"},
      {"converge", "gaps along lambda_n = -iq + 2^-n to the boundary value at -iq"},
      {"bounds", "measured sup norms against the operator norm bound"},
      {"counterexample", "partial integrals of the divergent psi at lambda = i"},
      {"selftest", "Gaussian integral identity on fixed and random parameters"},
      {"report", "collate evaluate and bounds output in the output directory"}};
  const auto it = d.find(sub);
  return it == d.end() ? std::string{} : it->second;
}

inline constexpr const char* out_env = "CABFEYN_OUT";
inline constexpr const char* default_out = "cabfeyn_out";

/// --out, else the config's output_dir, else $CABFEYN_OUT, else ./cabfeyn_out.
inline fs::path resolve_output_dir(const RunConfig& c, const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (c.output_dir) return *c.output_dir;
  if (const char* e = std::getenv(out_env); e && *e) return e;
  return default_out;
}

/// 17 significant digits, scientific.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

/// Minimal CSV writer: header first, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorKind::InvalidParameter, "cannot write '" + path.string() + "'");
    row_strings(header);
  }
  void row(const std::vector<double>& v) {
    std::vector<std::string> s;
    s.reserve(v.size());
    for (double x : v) s.push_back(fmt(x));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
    out_ << '\n';
    ++rows_;
  }
  std::size_t data_rows() const { return rows_ - 1; }

 private:
  std::ofstream out_;
  std::size_t rows_ = 0;
};

/// Rows of a CSV file written by CsvWriter (header excluded).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorKind::InvalidParameter, "CSV has no column '" + name + "'");
  }
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidParameter, "cannot read '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

struct Options {
  std::optional<std::string> out;
  bool quiet = false;
};

/// Shared state of one subcommand run.
class Run {
 public:
  Run(std::string sub, const RunConfig& cfg, const Options& opt)
      : sub_(std::move(sub)), cfg_(cfg), quiet_(opt.quiet), dir_(resolve_output_dir(cfg, opt.out)),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
    manifest_["subcommand"] = sub_;
    manifest_["config"] = to_json(cfg_);
    manifest_["seed"] = cfg_.seed;
    manifest_["files"] = json::array();
    manifest_["checks"] = json::array();
  }

  const RunConfig& cfg() const { return cfg_; }
  const fs::path& dir() const { return dir_; }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
    manifest_["files"].push_back(name);
    return CsvWriter(dir_ / name, header);
  }

  void log(const std::string& msg) const {
    if (!quiet_) std::cerr << "[" << sub_ << "] " << msg << "\n";
  }

  void check(const std::string& name, bool ok, const std::string& detail = {}) {
    manifest_["checks"].push_back({{"name", name}, {"passed", ok}, {"detail", detail}});
    if (!ok) {
      failed_ = true;
      log("FAILED " + name + (detail.empty() ? "" : ": " + detail));
    }
  }

  json& manifest() { return manifest_; }

  int finish() {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_["timings"] = {{"total_seconds", secs}};
    manifest_["status"] = failed_ ? "check_failure" : "ok";
    write_manifest();
    return failed_ ? exit_codes::check_failure : exit_codes::ok;
  }

  void write_manifest() {
    std::ofstream m(dir_ / (sub_ + "_manifest.json"), std::ios::binary);
    m << manifest_.dump(2) << '\n';
  }

 private:
  std::string sub_;
  RunConfig cfg_;
  bool quiet_;
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  json manifest_;
  bool failed_ = false;
};

/// Everything the engine needs, built from the config.
struct Setup {
  ScalePairPtr sp;
  CambElement h;
  KernelContext ctx;
  FresnelFunctional F;
  PsiFn psi;
  std::vector<double> xi;

  static Setup make(const RunConfig& c) {
    ScalePairPtr sp = build_scale(c);
    CambElement h = build_direction(sp, c.h, "h");
    KernelContext ctx = KernelContext::make(h);
    FresnelFunctional F = build_functional(c, sp);
    PsiFn psi = build_psi(c, ctx);
    return {sp, h, ctx, std::move(F), std::move(psi), build_xi(c)};
  }
};

inline KernelOptions kernel_options(const RunConfig& c) {
  KernelOptions o;
  o.delta = c.delta;
  return o;
}

// ---------------------------------------------------------------------------

inline int cmd_validate(Run& run) {
  const Setup s = Setup::make(run.cfg());
  const ValidationReport rep = validate(*s.sp);
  auto out = run.csv("validate.csv", {"check", "passed", "value"});
  for (const auto& c : rep.checks) {
    out.row_strings({c.name, c.passed ? "1" : "0", fmt(c.value)});
    run.check("scale:" + c.name, c.passed);
  }
  const bool dom = s.psi.envelope_dominates();
  out.row_strings({"psi envelope dominates", dom ? "1" : "0", fmt(0.0)});
  run.check("psi envelope dominates", dom);
  const KqResult kq = kq0_integral(s.F.f, run.cfg().q0);
  out.row_strings({"F in F^q0", kq.member ? "1" : "0", fmt(kq.value)});
  run.check("F in F^q0", kq.member);
  out.row_strings({"||h||^2", "1", fmt(s.ctx.h_norm_sq)});
  out.row_strings({"(h,a)", "1", fmt(s.ctx.h_dot_a)});
  out.row_strings({"Var(a)", "1", fmt(s.sp->var_a())});
  run.log("scale pair '" + s.sp->label() + "' validated");
  return run.finish();
}

/// Sample moments of (w,x)~ for h and the directions of F against mean
/// (w,a) and variance ||w||^2.
inline int cmd_sample(Run& run) {
  const auto& c = run.cfg();
  const Setup s = Setup::make(c);
  auto dirs = mc_directions(s.F, s.h);
  const PwzSample sample = sample_pwz(s.sp, dirs, c.n_paths, c.path_steps, c.seed);
  auto out = run.csv("sample.csv", {"direction", "mean", "expected_mean", "mean_z", "variance", "expected_variance",
                                    "variance_z"});
  const double n = static_cast<double>(sample.n_paths);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < sample.n_paths; ++p) s1 += sample.at(p, k);
    const double mean = s1 / n;
    for (std::size_t p = 0; p < sample.n_paths; ++p) s2 += (sample.at(p, k) - mean) * (sample.at(p, k) - mean);
    const double var = s2 / (n - 1.0);
    const double em = pair_with_a(dirs[k]), ev = dirs[k].norm_sq();
    const double mz = ev > 0.0 ? (mean - em) / std::sqrt(ev / n) : 0.0;
    const double vz = ev > 0.0 ? (var - ev) / (ev * std::sqrt(2.0 / n)) : 0.0;
    const std::string label = dirs[k].label().empty() ? "w" + std::to_string(k) : dirs[k].label();
    out.row_strings({label, fmt(mean), fmt(em), fmt(mz), fmt(var), fmt(ev), fmt(vz)});
    run.check("pwz law " + label, std::abs(mz) <= 3.0 && std::abs(vz) <= 3.0,
              "mean_z=" + fmt(mz) + " variance_z=" + fmt(vz));
  }
  run.log(std::to_string(sample.n_paths) + " paths sampled");
  return run.finish();
}

inline void write_result(CsvWriter& out, const OperatorResult& r) {
  for (std::size_t j = 0; j < r.xi_grid.size(); ++j)
    out.row({r.xi_grid[j], r.values[j].real(), r.values[j].imag(),
             r.mc_stderr.empty() ? std::nan("") : r.mc_stderr[j]});
}

inline int cmd_evaluate(Run& run) {
  const auto& c = run.cfg();
  const Setup s = Setup::make(c);
  const KernelOptions ko = kernel_options(c);
  json evals = json::array();
  std::optional<PwzSample> sample;
  for (std::size_t k = 0; k < c.lambda.size(); ++k) {
    const cplx lam = c.lambda[k];
    const auto kr = k_lambda(s.F, s.ctx, s.psi, LambdaParam(lam), s.xi, c.q0, ko);
    auto out = run.csv("evaluate_kernel_" + std::to_string(k) + ".csv", {"xi", "re", "im", "stderr"});
    write_result(out, kr);
    json e = {{"index", k}, {"lambda", detail::write_complex(lam)}, {"kernel", true}, {"mc", false}};
    if (lam.imag() == 0.0 && lam.real() > 0.0 && c.n_paths >= 2) {
      if (!sample) sample = sample_pwz(s.sp, mc_directions(s.F, s.h), c.n_paths, c.path_steps, c.seed);
      const auto mr = i_lambda_mc(s.F, s.h, s.psi, lam.real(), s.xi, *sample);
      auto mo = run.csv("evaluate_mc_" + std::to_string(k) + ".csv", {"xi", "re", "im", "stderr"});
      write_result(mo, mr);
      e["mc"] = true;
    }
    evals.push_back(e);
  }
  if (c.q) {
    const auto jr = j_q(s.F, s.ctx, s.psi, *c.q, s.xi, c.q0, c.delta, ko);
    auto out = run.csv("evaluate_kernel_q.csv", {"xi", "re", "im", "stderr"});
    write_result(out, jr);
    evals.push_back({{"index", "q"}, {"lambda", detail::write_complex(cplx(0.0, -*c.q))}, {"kernel", true},
                     {"mc", false}});
  }
  run.manifest()["evaluations"] = evals;
  run.manifest()["tolerances"] = {{"kernel_rel_tol", ko.rel_tol}, {"truncation_drop", ko.drop}};
  run.log("evaluated " + std::to_string(evals.size()) + " parameter value(s) on " + std::to_string(s.xi.size()) +
          " xi points");
  return run.finish();
}

inline int cmd_converge(Run& run) {
  const auto& c = run.cfg();
  if (!c.q) throw detail::config_error("q", "converge needs q");
  const Setup s = Setup::make(c);
  const auto seq = feynman_sequence(*c.q, c.converge_terms);
  const auto st = convergence_study(s.F, s.ctx, s.psi, *c.q, c.q0, seq, s.xi, c.delta, kernel_options(c));
  auto out = run.csv("converge.csv", {"n", "re_lambda", "im_lambda", "gap"});
  for (std::size_t n = 0; n < st.gaps.size(); ++n)
    out.row({static_cast<double>(n + 1), st.lambdas[n].real(), st.lambdas[n].imag(), st.gaps[n]});
  auto lim = run.csv("converge_limit.csv", {"xi", "re", "im", "stderr"});
  write_result(lim, st.limit);
  for (double g : st.gaps) run.check("finite gap", std::isfinite(g));
  run.log("final gap " + fmt(st.gaps.back()));
  return run.finish();
}

/// Measured sup |K psi| against the operator-norm bound times ||psi||_{1,delta}.
inline int cmd_bounds(Run& run) {
  const auto& c = run.cfg();
  const Setup s = Setup::make(c);
  const KernelOptions ko = kernel_options(c);
  auto out = run.csv("bounds.csv", {"re_lambda", "im_lambda", "bound", "psi_norm", "measured_sup", "slack"});
  std::vector<cplx> lams = c.lambda;
  if (c.q) lams.emplace_back(0.0, -*c.q);
  const double var_a = s.sp->var_a();
  for (const cplx& lam : lams) {
    const LambdaParam lp(lam);
    const double bound = op_norm_bound(s.F, s.ctx, lp, c.q0);
    const double nrm = lam.real() > 0.0 || var_a == 0.0 ? l1_norm(s.psi)
                                                        : nu_delta_norm(s.psi, c.delta.value_or(1.0), var_a).value;
    const auto r = k_lambda(s.F, s.ctx, s.psi, lp, s.xi, c.q0, ko);
    double sup = 0.0;
    for (const auto& v : r.values) sup = std::max(sup, std::abs(v));
    const double slack = bound * nrm - sup;
    out.row({lam.real(), lam.imag(), bound, nrm, sup, slack});
    run.check("norm bound", sup <= bound * nrm * (1.0 + 1e-12), "slack=" + fmt(slack));
  }
  return run.finish();
}

inline int cmd_counterexample(Run& run) {
  const auto& c = run.cfg();
  const ScalePairPtr sp = build_scale(c);
  const CambElement h = build_direction(sp, c.h, "h");
  const KernelContext ctx = KernelContext::make(h);
  const auto rep = counterexample_study(ctx, c.radii);
  auto out = run.csv("counterexample.csv", {"R", "partial", "closed_form"});
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    out.row({r.radius, r.partial, r.closed_form});
    const double rel = r.closed_form == 0.0 ? std::abs(r.partial) : std::abs(r.partial / r.closed_form - 1.0);
    run.check("closed form R=" + fmt(r.radius), rel <= 1e-8, "rel=" + fmt(rel));
    if (i > 0) run.check("increasing at R=" + fmt(r.radius), r.partial > rep.rows[i - 1].partial);
  }
  auto norms = run.csv("counterexample_norms.csv", {"quantity", "numeric", "closed_form"});
  norms.row_strings({"psi_l1", fmt(rep.psi_l1), fmt(rep.psi_l1_closed)});
  norms.row_strings({"psi_sup", fmt(rep.psi_sup), fmt(rep.psi_sup_closed)});
  run.check("psi in L1 and Linf", std::isfinite(rep.psi_l1) && std::isfinite(rep.psi_sup));
  run.manifest()["growth_rate"] = rep.growth_rate;
  run.manifest()["h_dot_a"] = rep.h_dot_a;
  return run.finish();
}

/// The Gaussian integral identity on fixed and seeded random (alpha, beta).
inline int cmd_selftest(Run& run) {
  std::vector<std::pair<cplx, cplx>> cases{{1.0, 0.0}, {cplx(1, 1), cplx(0, 1)}, {cplx(1e-3, 1), 0.0},
                                           {cplx(2, -3), cplx(1, 2)}};
  std::mt19937_64 rng(run.cfg().seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double re = std::pow(10.0, -3.0 + 4.0 * u(rng)), im = -2.0 + 4.0 * u(rng);
    const double s = std::sqrt(re);
    cases.emplace_back(cplx(re, im), s * cplx(-1.0 + 2.0 * u(rng), -1.0 + 2.0 * u(rng)));
  }
  auto out = run.csv("selftest.csv", {"re_alpha", "im_alpha", "re_beta", "im_beta", "re_numeric", "im_numeric",
                                      "re_closed", "im_closed", "rel_error"});
  for (const auto& [a, b] : cases) {
    const auto g = gaussian_identity_check(a, b);
    out.row({a.real(), a.imag(), b.real(), b.imag(), g.numeric.real(), g.numeric.imag(), g.closed_form.real(),
             g.closed_form.imag(), g.rel_error()});
    run.check("gaussian identity", g.rel_error() <= 1e-6, "rel=" + fmt(g.rel_error()));
  }
  run.manifest()["tolerances"] = {{"gaussian_identity_rel", 1e-6}};
  return run.finish();
}

/// Collates evaluate_* and bounds.csv from the output directory.
inline int cmd_report(Run& run) {
  auto out = run.csv("report.csv", {"kind", "index", "max_abs_gap", "max_gap_over_se", "bound_slack"});
  bool any = false;
  for (std::size_t k = 0;; ++k) {
    const fs::path kp = run.dir() / ("evaluate_kernel_" + std::to_string(k) + ".csv");
    const fs::path mp = run.dir() / ("evaluate_mc_" + std::to_string(k) + ".csv");
    if (!fs::exists(kp)) break;
    if (!fs::exists(mp)) continue;
    const auto kt = read_csv(kp), mt = read_csv(mp);
    if (kt.rows.size() != mt.rows.size()) throw Error(ErrorKind::InvalidParameter, "evaluate CSVs disagree in length");
    double gap = 0.0, z = 0.0;
    for (std::size_t i = 0; i < kt.rows.size(); ++i) {
      const cplx kv(std::stod(kt.rows[i][kt.col("re")]), std::stod(kt.rows[i][kt.col("im")]));
      const cplx mv(std::stod(mt.rows[i][mt.col("re")]), std::stod(mt.rows[i][mt.col("im")]));
      const double se = std::stod(mt.rows[i][mt.col("stderr")]);
      gap = std::max(gap, std::abs(kv - mv));
      z = std::max(z, se > 0.0 ? std::abs(kv - mv) / se : (kv == mv ? 0.0 : INFINITY));
    }
    out.row_strings({"oracle", std::to_string(k), fmt(gap), fmt(z), fmt(std::nan(""))});
    run.check("oracle gap index " + std::to_string(k), z <= 3.0, "gap/se=" + fmt(z));
    any = true;
  }
  if (fs::exists(run.dir() / "bounds.csv")) {
    const auto bt = read_csv(run.dir() / "bounds.csv");
    for (std::size_t i = 0; i < bt.rows.size(); ++i) {
      const double slack = std::stod(bt.rows[i][bt.col("slack")]);
      out.row_strings({"bound", std::to_string(i), fmt(std::nan("")), fmt(std::nan("")), fmt(slack)});
      run.check("bound slack row " + std::to_string(i), slack >= 0.0);
      any = true;
    }
  }
  if (!any) run.log("nothing to report in " + run.dir().string());
  run.manifest()["collated"] = any;
  return run.finish();
}

/// Runs one subcommand and maps errors to exit codes.
inline int run(const RunConfig& cfg, const std::string& sub, const Options& opt = {}) {
  static const std::map<std::string, int (*)(Run&)> table{
      {"validate", cmd_validate}, {"sample", cmd_sample},         {"evaluate", cmd_evaluate},
      {"converge", cmd_converge}, {"bounds", cmd_bounds},         {"counterexample", cmd_counterexample},
      {"selftest", cmd_selftest}, {"report", cmd_report}};
  const auto it = table.find(sub);
  if (it == table.end()) {
    std::cerr << "unknown subcommand '" << sub << "'\n";
    return exit_codes::config_error;
  }
  std::optional<Run> r;
  try {
    r.emplace(sub, cfg, opt);
    return it->second(*r);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (r) {
      r->manifest()["status"] = "error";
      r->manifest()["error"] = e.what();
      r->write_manifest();
    }
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_codes::engine_error;
  }
}

}  // namespace cabfeyn::harness
