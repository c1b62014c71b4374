#pragma once

// The operator (I_lambda(F;h) psi)(xi) two ways: Monte Carlo over GBMP paths
// for real lambda > 0, and the closed-form kernel integral K_lambda for
// admissible complex lambda including the boundary lambda = -iq. Also the
// norms, bounds and limit studies built on top of them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cabfeyn/camb_hilbert.hpp"
#include "cabfeyn/error.hpp"
#include "cabfeyn/fresnel.hpp"
#include "cabfeyn/gbmp_sampler.hpp"
#include "cabfeyn/kernel.hpp"
#include "cabfeyn/parallel.hpp"
#include "cabfeyn/quadrature.hpp"

namespace cabfeyn {

/// amplitude * exp(-(v - center)^2 / (2 sigma^2)).
struct GaussianDecay {
  double center = 0.0;
  double sigma = 1.0;
  double amplitude = 1.0;
};

/// amplitude * exp(-rate |v - center|).
struct ExponentialDecay {
  double center = 0.0;
  double rate = 1.0;
  double amplitude = 1.0;
};

/// amplitude on [center - radius, center + radius], zero outside.
struct CompactSupport {
  double center = 0.0;
  double radius = 1.0;
  double amplitude = 1.0;
};

using Envelope = std::variant<GaussianDecay, ExponentialDecay, CompactSupport>;

/// A test function psi together with a declared envelope |psi| <= env and a
/// bound |d arg psi / dv| <= phase_rate + phase_slope |v| used for panel
/// placement.
struct PsiFn {
  std::function<cplx(double)> psi;
  Envelope envelope;
  std::string label;
  double phase_rate = 0.0;
  double phase_slope = 0.0;

  cplx operator()(double v) const { return psi(v); }

  double log_envelope(double v) const {
    return std::visit(
        [v](const auto& e) -> double {
          using E = std::decay_t<decltype(e)>;
          const double la = std::log(e.amplitude);
          if constexpr (std::is_same_v<E, GaussianDecay>) {
            const double d = (v - e.center) / e.sigma;
            return la - 0.5 * d * d;
          } else if constexpr (std::is_same_v<E, ExponentialDecay>) {
            return la - e.rate * std::abs(v - e.center);
          } else {
            return std::abs(v - e.center) <= e.radius ? la : -std::numeric_limits<double>::infinity();
          }
        },
        envelope);
  }
  double envelope_at(double v) const { return std::exp(log_envelope(v)); }

  /// Interval carrying psi up to a factor exp(-5000) of the envelope peak.
  std::pair<double, double> bracket() const {
    return std::visit(
        [](const auto& e) -> std::pair<double, double> {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, GaussianDecay>)
            return {e.center - 100.0 * e.sigma, e.center + 100.0 * e.sigma};
          else if constexpr (std::is_same_v<E, ExponentialDecay>)
            return {e.center - 5000.0 / e.rate, e.center + 5000.0 / e.rate};
          else
            return {e.center - e.radius, e.center + e.radius};
        },
        envelope);
  }

  /// Window used by the dominance probe.
  std::pair<double, double> probe_window() const {
    return std::visit(
        [](const auto& e) -> std::pair<double, double> {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, GaussianDecay>)
            return {e.center - 12.0 * e.sigma, e.center + 12.0 * e.sigma};
          else if constexpr (std::is_same_v<E, ExponentialDecay>)
            return {e.center - 60.0 / e.rate, e.center + 60.0 / e.rate};
          else
            return {e.center - 1.1 * e.radius, e.center + 1.1 * e.radius};
        },
        envelope);
  }

  /// psi * exp{delta Var(a) v^2} is integrable.
  bool delta_admissible(double delta, double var_a) const {
    const double g = delta * var_a;
    return std::visit(
        [g](const auto& e) -> bool {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, GaussianDecay>)
            return g < 0.5 / (e.sigma * e.sigma);
          else if constexpr (std::is_same_v<E, ExponentialDecay>)
            return g == 0.0;
          else
            return true;
        },
        envelope);
  }

  /// |psi| <= envelope on `probes` equispaced points of probe_window().
  bool envelope_dominates(int probes = 10000) const {
    const auto [lo, hi] = probe_window();
    for (int i = 0; i < probes; ++i) {
      const double v = lo + (hi - lo) * i / (probes - 1);
      if (std::abs(psi(v)) > envelope_at(v) * (1.0 + 1e-12) + 1e-300) return false;
    }
    return true;
  }

  /// Phase rate bound at v.
  double phase_bound(double v) const { return phase_rate + phase_slope * std::abs(v); }
};

/// amplitude * exp(-(v-center)^2/(2 sigma^2) + i kappa v).
inline PsiFn gaussian_psi(double center = 0.0, double sigma = 1.0, double amplitude = 1.0, double kappa = 0.0) {
  if (!(sigma > 0.0) || !(amplitude > 0.0))
    throw Error(ErrorKind::InvalidParameter, "gaussian psi needs sigma > 0 and amplitude > 0");
  PsiFn p;
  p.psi = [=](double v) {
    const double d = (v - center) / sigma;
    return amplitude * std::exp(cplx(-0.5 * d * d, kappa * v));
  };
  p.envelope = GaussianDecay{center, sigma, amplitude};
  p.label = "gaussian";
  p.phase_rate = std::abs(kappa);
  return p;
}

/// Standard normal density.
inline PsiFn standard_gaussian_psi() {
  PsiFn p = gaussian_psi(0.0, 1.0, 1.0 / std::sqrt(2.0 * std::numbers::pi));
  p.label = "standard_gaussian";
  return p;
}

/// Smooth bump exp(1 - 1/(1 - s^2)), s = (v - center)/radius, on |s| < 1.
inline PsiFn bump_psi(double center = 0.0, double radius = 1.0) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidParameter, "bump psi needs radius > 0");
  PsiFn p;
  p.psi = [=](double v) -> cplx {
    const double s = (v - center) / radius;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
  };
  p.envelope = CompactSupport{center, radius, 1.0};
  p.label = "bump";
  return p;
}

/// psi(v) = v chi_[0,inf)(v) exp{i v^2/2 - i sqrt2 c_a v/2 + c_a^2/2 - sqrt2 c_a v/4},
/// c_a = (h,a). |psi| decays like exp(-sqrt2 c_a v/4) so it lies in every L^p,
/// while psi * H(i; 0, v) grows.
inline PsiFn counterexample_psi(double h_dot_a) {
  if (!(h_dot_a > 0.0)) throw Error(ErrorKind::BadConfig, "counterexample needs (h,a) > 0");
  const double ha = h_dot_a, c = std::numbers::sqrt2 * ha / 4.0;
  PsiFn p;
  p.psi = [=](double v) -> cplx {
    if (v < 0.0) return 0.0;
    return v * std::exp(cplx(0.5 * ha * ha - c * v, 0.5 * v * v - std::numbers::sqrt2 * ha * v / 2.0));
  };
  // v e^{-cv} <= (2/(c e)) e^{-cv/2}.
  p.envelope = ExponentialDecay{0.0, c / 2.0, std::exp(0.5 * ha * ha) * 2.0 / (c * std::numbers::e)};
  p.label = "counterexample";
  p.phase_rate = std::numbers::sqrt2 * ha / 2.0;
  p.phase_slope = 1.0;
  return p;
}

enum class Route { MC, Kernel };

inline const char* to_string(Route r) { return r == Route::MC ? "MC" : "kernel"; }

struct OperatorMeta {
  cplx lambda{};
  std::string h_label;
  std::string f_label;
  Route route = Route::Kernel;
};

struct OperatorResult {
  std::vector<double> xi_grid;
  std::vector<cplx> values;
  std::vector<double> mc_stderr;  // empty unless route == MC
  OperatorMeta meta;
};

/// n equispaced points on [lo, hi] (just lo when n == 1).
inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "grid count must be >= 1");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = (n == 1) ? lo : (i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1));
  return x;
}

// ---------------------------------------------------------------------------
// Monte Carlo route

/// Directions to sample for MC evaluation: h first, then those of F.
inline std::vector<CambElement> mc_directions(const FresnelFunctional& F, const CambElement& h) {
  std::vector<CambElement> d{h};
  for (auto& w : directions_of(F.f)) d.push_back(w);
  return d;
}

/// Per xi, the sample mean over paths of F(lambda^{-1/2} x) psi(lambda^{-1/2}(h,x)~ + xi).
/// F is evaluated once per path since (w, x + xi)~ = (w, x)~.
inline OperatorResult i_lambda_mc(const FresnelFunctional& F, const CambElement& h, const PsiFn& psi, double lambda,
                                  std::span<const double> xi, const PwzSample& sample) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::NonPositiveLambda, "Monte Carlo route needs real lambda > 0");
  if (sample.n_paths < 2) throw Error(ErrorKind::InvalidParameter, "need at least two paths");
  const long hcol = sample.find(h);
  if (hcol < 0) throw Error(ErrorKind::InvalidParameter, "h is not among the sampled directions");
  const auto dirs = directions_of(F.f);
  std::vector<std::size_t> cols;
  for (const auto& w : dirs) {
    const long c = sample.find(w);
    if (c < 0) throw Error(ErrorKind::InvalidParameter, "a direction of F is not among the sampled directions");
    cols.push_back(static_cast<std::size_t>(c));
  }
  const double s = 1.0 / std::sqrt(lambda);
  const std::size_t n = sample.n_paths, nx = xi.size();
  // Per-path F values, then accumulate per xi; paths are summed in index
  // order so results do not depend on thread count.
  std::vector<cplx> fval(n);
  std::vector<double> u(n);
  const std::size_t blocks = std::min<std::size_t>(n, default_stream_count);
  const std::size_t chunk = (n + blocks - 1) / blocks;
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> p(cols.size());
    for (std::size_t i = b * chunk; i < std::min(n, (b + 1) * chunk); ++i) {
      for (std::size_t k = 0; k < cols.size(); ++k) p[k] = sample.at(i, cols[k]);
      fval[i] = eval_from_pwz(F.f, p, s);
      u[i] = s * sample.at(i, static_cast<std::size_t>(hcol));
    }
  });
  OperatorResult r;
  r.xi_grid.assign(xi.begin(), xi.end());
  r.values.assign(nx, 0.0);
  r.mc_stderr.assign(nx, 0.0);
  r.meta = {cplx(lambda, 0.0), h.label(), F.label, Route::MC};
  parallel_for(nx, [&](std::size_t j) {
    cplx sum{};
    double sre2 = 0.0, sim2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx y = fval[i] * psi(u[i] + xi[j]);
      sum += y;
      sre2 += y.real() * y.real();
      sim2 += y.imag() * y.imag();
    }
    const double dn = static_cast<double>(n);
    const cplx mean = sum / dn;
    const double var_re = std::max(0.0, (sre2 - dn * mean.real() * mean.real()) / (dn - 1.0));
    const double var_im = std::max(0.0, (sim2 - dn * mean.imag() * mean.imag()) / (dn - 1.0));
    r.values[j] = mean;
    r.mc_stderr[j] = std::sqrt((var_re + var_im) / dn);
  });
  return r;
}

/// Samples its own paths (seed, default stream layout) and evaluates.
inline OperatorResult i_lambda_mc(const FresnelFunctional& F, const CambElement& h, const PsiFn& psi, double lambda,
                                  std::span<const double> xi, std::size_t n_paths, std::uint64_t seed,
                                  int steps = default_path_steps) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::NonPositiveLambda, "Monte Carlo route needs real lambda > 0");
  const PwzSample sample = sample_pwz(h.scale_ptr(), mc_directions(F, h), n_paths, steps, seed);
  return i_lambda_mc(F, h, psi, lambda, xi, sample);
}

// ---------------------------------------------------------------------------
// Kernel route

struct KernelOptions {
  double rel_tol = 1e-11;
  double drop = 50.0;  // truncate where psi-envelope * |H| falls below exp(-drop) of its peak
  int gh_nodes = 64;   // Gaussian eta
  std::optional<double> delta;
};

namespace detail {

/// Where psi * H carries its mass for a given xi.
inline numint::Support v_support(const PsiFn& psi, const KernelContext& ctx, const LambdaParam& lambda, double xi,
                               double drop) {
  const auto [blo, bhi] = psi.bracket();
  auto logg = [&](double v) { return psi.log_envelope(v) + log_H(lambda, xi, v, ctx).real(); };
  return numint::log_concave_support(logg, blo, bhi, drop);
}

/// int psi(v) V L H A dv for one weight geometry, over the support `sup`.
inline cplx v_integral(const PsiFn& psi, const KernelContext& ctx, const LambdaParam& lambda, double xi,
                       const WeightGeometry& g, const numint::Support& sup, const KernelOptions& opt) {
  if (!(sup.hi > sup.lo)) return 0.0;
  const cplx la = log_A(lambda, g);
  const cplx lvl0 = log_VL(lambda, xi, xi, g, ctx);  // v-independent part
  const double n2 = ctx.h_norm_sq;
  const double im_lam = std::abs(lambda.value().imag()), im_root = std::abs(lambda.root().imag());
  auto rate = [&](double v) {
    return (im_lam * std::abs(v - xi) + im_root * std::abs(ctx.h_dot_a) + std::abs(g.h_dot)) / n2 +
           psi.phase_bound(v);
  };
  const auto breaks = numint::phase_breaks(sup.lo, sup.hi, rate, std::numbers::pi, 8);
  auto f = [&](double v) -> cplx {
    const cplx p = psi(v);
    if (p == cplx(0.0, 0.0)) return 0.0;
    return p * exp_checked(lvl0 + cplx(0.0, (v - xi) * g.h_dot / n2) + log_H(lambda, xi, v, ctx) + la);
  };
  numint::Options o;
  o.rel_tol = opt.rel_tol;
  const double scale = std::exp(std::min(700.0, sup.peak + (lvl0 + la).real()));
  o.abs_tol = 1e-15 * scale * (sup.hi - sup.lo);
  o.max_panels = std::max<int>(200000, static_cast<int>(4 * breaks.size()));
  return numint::integrate(f, breaks, o).value;
}

/// int [int psi V L H A dv] df(w) for each measure variant.
inline cplx outer_integral(const SpectralMeasure& f, const PsiFn& psi, const KernelContext& ctx,
                           const LambdaParam& lambda, double xi, const numint::Support& sup, const KernelOptions& opt) {
  if (const auto* atoms = std::get_if<Atoms>(&f)) {
    cplx acc{};
    for (const auto& atom : atoms->atoms)
      acc += atom.weight * v_integral(psi, ctx, lambda, xi, weight_geometry(ctx, atom.w), sup, opt);
    return acc;
  }
  const auto& line = std::get<LinePushforward>(f);
  const WeightGeometry g0 = weight_geometry(ctx, line.direction);
  auto at = [&](double s) { return v_integral(psi, ctx, lambda, xi, g0.scaled(s), sup, opt); };
  return std::visit(
      [&](const auto& m) -> cplx {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Atoms1D>) {
          cplx acc{};
          for (const auto& [v, c] : m.points) acc += c * at(v);
          return acc;
        } else if constexpr (std::is_same_v<M, GaussianEta>) {
          return m.scale * numint::gaussian_expectation(at, m.mean, std::sqrt(m.variance), opt.gh_nodes);
        } else {
          numint::Options o;
          o.rel_tol = 1e-9;
          o.abs_tol = 1e-14;
          o.initial_panels = 16;
          return numint::integrate([&](double s) { return m.density(s) * at(s); }, -m.radius, m.radius, o).value;
        }
      },
      line.eta);
}

inline void require_scale(const FresnelFunctional& F, const KernelContext& ctx) {
  for (const auto& w : directions_of(F.f))
    if (w.scale_ptr() != ctx.h.scale_ptr())
      throw Error(ErrorKind::MismatchedScalePair, "F and h live on different scale pairs");
}

/// Admissibility of lambda for the kernel route; throws with a message that
/// names the violated condition.
inline void require_admissible(const LambdaParam& lambda, double q0, const PsiFn& psi, const ScalePair& sp,
                               const std::optional<double>& delta) {
  const cplx lam = lambda.value();
  if (lam.real() > 0.0) {
    if (!in_gamma_closure(lambda, q0))
      throw Error(ErrorKind::NotAdmissible, "admissibility: lambda outside the closed region Gamma_q0 (q0=" +
                                                std::to_string(q0) + ")");
    return;
  }
  const double q = -lam.imag();
  if (!(std::abs(q) > q0))
    throw Error(ErrorKind::NotAdmissible, "admissibility: lambda = -iq needs |q| > q0 (q=" + std::to_string(q) +
                                              ", q0=" + std::to_string(q0) + ")");
  if (sp.var_a() > 0.0) {
    if (!delta || !(*delta > 0.0))
      throw Error(ErrorKind::PsiNotIntegrable, "lambda = -iq with Var(a) > 0 needs a weight delta > 0");
    if (!psi.delta_admissible(*delta, sp.var_a()))
      throw Error(ErrorKind::PsiNotIntegrable, "psi is not integrable against exp{delta Var(a) v^2}");
  }
}

}  // namespace detail

/// (K_lambda(F;h) psi)(xi) = M(lambda;h) int int psi(v) V L H A dv df(w).
inline OperatorResult k_lambda(const FresnelFunctional& F, const KernelContext& ctx, const PsiFn& psi,
                               const LambdaParam& lambda, std::span<const double> xi, double q0,
                               const KernelOptions& opt = {}) {
  detail::require_scale(F, ctx);
  if (!kq0_integral(F.f, q0).member) throw Error(ErrorKind::NotInFq0, "F is not in F^q0 for q0=" + std::to_string(q0));
  detail::require_admissible(lambda, q0, psi, ctx.scale(), opt.delta);
  const cplx m = kernel_M(lambda, ctx);
  OperatorResult r;
  r.xi_grid.assign(xi.begin(), xi.end());
  r.values.assign(xi.size(), 0.0);
  r.meta = {lambda.value(), ctx.h.label(), F.label, Route::Kernel};
  parallel_for(xi.size(), [&](std::size_t j) {
    const auto sup = detail::v_support(psi, ctx, lambda, xi[j], opt.drop);
    r.values[j] = m * detail::outer_integral(F.f, psi, ctx, lambda, xi[j], sup, opt);
  });
  return r;
}

/// Boundary value at lambda = -iq.
inline OperatorResult j_q(const FresnelFunctional& F, const KernelContext& ctx, const PsiFn& psi, double q,
                          std::span<const double> xi, double q0, std::optional<double> delta,
                          KernelOptions opt = {}) {
  opt.delta = delta;
  return k_lambda(F, ctx, psi, LambdaParam::feynman(q), xi, q0, opt);
}

/// lambda_n = -iq + 2^{-n}, n = 1..terms.
inline std::vector<cplx> feynman_sequence(double q, int terms) {
  std::vector<cplx> s;
  for (int n = 1; n <= terms; ++n) s.emplace_back(std::ldexp(1.0, -n), -q);
  return s;
}

struct ConvergenceStudy {
  std::vector<cplx> lambdas;
  std::vector<double> gaps;  // max over xi of |K_{lambda_n} - J_q|
  OperatorResult limit;
};

/// Sup-norm gaps between K_{lambda_n} psi and the boundary value J_q psi.
inline ConvergenceStudy convergence_study(const FresnelFunctional& F, const KernelContext& ctx, const PsiFn& psi,
                                          double q, double q0, std::span<const cplx> lambdas,
                                          std::span<const double> xi, std::optional<double> delta,
                                          KernelOptions opt = {}) {
  if (!(q0 > 0.0)) throw Error(ErrorKind::InvalidParameter, "q0 must be positive");
  if (!(std::abs(q) > q0))
    throw Error(ErrorKind::SequenceLeavesRegion, "-iq lies outside Gamma_q0: need |q| > q0");
  for (const cplx& l : lambdas) {
    if (!(l.real() > 0.0) || !in_gamma(LambdaParam(l), q0))
      throw Error(ErrorKind::SequenceLeavesRegion, "sequence term (" + std::to_string(l.real()) + "," +
                                                       std::to_string(l.imag()) + ") is not in Int Gamma_q0");
  }
  ConvergenceStudy out;
  out.lambdas.assign(lambdas.begin(), lambdas.end());
  out.limit = j_q(F, ctx, psi, q, xi, q0, delta, opt);
  opt.delta = delta;
  for (const cplx& l : lambdas) {
    const auto k = k_lambda(F, ctx, psi, LambdaParam(l), xi, q0, opt);
    double gap = 0.0;
    for (std::size_t j = 0; j < xi.size(); ++j) gap = std::max(gap, std::abs(k.values[j] - out.limit.values[j]));
    out.gaps.push_back(gap);
  }
  return out;
}

/// S(lambda;h) M(|lambda|;h) int k(q0;w) d|f| for lambda in C_+ and
/// M(|q|;h) int k(q0;w) d|f| at lambda = -iq.
inline double op_norm_bound(const FresnelFunctional& F, const KernelContext& ctx, const LambdaParam& lambda,
                            double q0) {
  const KqResult kq = kq0_integral(F.f, q0);
  if (!kq.member) throw Error(ErrorKind::NotInFq0, "F is not in F^q0 for q0=" + std::to_string(q0));
  const cplx lam = lambda.value();
  if (lam.real() > 0.0) {
    if (!in_gamma_closure(lambda, q0)) throw Error(ErrorKind::NotAdmissible, "admissibility: lambda outside Gamma_q0");
    return kernel_S(lambda, ctx) * kernel_M_abs(std::abs(lam), ctx) * kq.value;
  }
  if (!(std::abs(lam.imag()) > q0)) throw Error(ErrorKind::NotAdmissible, "admissibility: |q| must exceed q0");
  return kernel_M_abs(std::abs(lam.imag()), ctx) * kq.value;
}

struct NuNorm {
  double value = 0.0;
  bool divergent = false;
};

/// ||psi||_{1,delta} = int |psi(v)| exp{delta Var(a) v^2} dv.
inline NuNorm nu_delta_norm(const PsiFn& psi, double delta, double var_a) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidParameter, "delta must be positive");
  if (!psi.delta_admissible(delta, var_a)) return {std::numeric_limits<double>::infinity(), true};
  const double g = delta * var_a;
  const auto [blo, bhi] = psi.bracket();
  auto logw = [&](double v) { return psi.log_envelope(v) + g * v * v; };
  const auto sup = numint::log_concave_support(logw, blo, bhi, 50.0);
  numint::Options o;
  o.rel_tol = 1e-11;
  o.abs_tol = 1e-15 * std::exp(std::min(700.0, sup.peak)) * (sup.hi - sup.lo);
  // Split at the envelope centre, where |psi| may have a kink.
  std::vector<double> breaks = numint::uniform_breaks(sup.lo, sup.hi, 32);
  const double c = std::visit([](const auto& e) { return e.center; }, psi.envelope);
  if (c > sup.lo && c < sup.hi) {
    breaks.push_back(c);
    std::sort(breaks.begin(), breaks.end());
  }
  const double v =
      numint::integrate([&](double x) { return std::abs(psi(x)) * std::exp(g * x * x); }, breaks, o).value.real();
  if (!std::isfinite(v)) return {std::numeric_limits<double>::infinity(), true};
  return {v, false};
}

/// ||psi||_1.
inline double l1_norm(const PsiFn& psi) { return nu_delta_norm(psi, 1.0, 0.0).value; }

/// sup |psi| from a 10^4-point scan of probe_window() refined by golden-section search.
inline double sup_norm(const PsiFn& psi) {
  const auto [lo, hi] = psi.probe_window();
  constexpr int n = 10000;
  const double h = (hi - lo) / (n - 1);
  int best = 0;
  double top = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(psi(lo + h * i));
    if (a > top) top = a, best = i;
  }
  double a = lo + h * std::max(0, best - 1), b = lo + h * std::min(n - 1, best + 1);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    if (std::abs(psi(x1)) < std::abs(psi(x2)))
      a = x1;
    else
      b = x2;
  }
  return std::max(top, std::abs(psi(0.5 * (a + b))));
}

struct CounterexampleRow {
  double radius = 0.0;
  double partial = 0.0;      // quadrature
  double closed_form = 0.0;  // antiderivative
};

struct CounterexampleReport {
  double h_dot_a = 0.0;
  double growth_rate = 0.0;  // sqrt2 (h,a)/4
  std::vector<CounterexampleRow> rows;
  double psi_l1 = 0.0, psi_l1_closed = 0.0;
  double psi_sup = 0.0, psi_sup_closed = 0.0;
};

/// (2 pi)^{-1/2} int_0^R v e^{c v} dv = (2 pi)^{-1/2} [c R e^{cR} - (e^{cR} - 1)] / c^2.
inline double counterexample_partial_closed(double h_dot_a, double radius) {
  const double c = std::numbers::sqrt2 * h_dot_a / 4.0, x = c * radius;
  return (x * std::exp(x) - std::expm1(x)) / (c * c) / std::sqrt(2.0 * std::numbers::pi);
}

/// |M(i;h)| |int_0^R psi(v) H(i; 0, v; h) dv| by quadrature.
inline double counterexample_partial(const KernelContext& ctx, double radius) {
  if (!(radius > 0.0)) return 0.0;
  const LambdaParam lam(cplx(0.0, 1.0));
  const PsiFn psi = counterexample_psi(ctx.h_dot_a);
  auto f = [&](double v) { return psi(v) * exp_checked(log_H(lam, 0.0, v, ctx)); };
  numint::Options o;
  o.rel_tol = 1e-13;
  o.initial_panels = std::max(8, static_cast<int>(std::ceil(radius)));
  const cplx val = numint::integrate(f, 0.0, radius, o).value;
  return std::abs(kernel_M(lam, ctx)) * std::abs(val);
}

/// The divergent configuration q = -1, F = 1, xi = 0: partial integrals over
/// [0, R] together with the finite L^1 and sup norms of psi.
inline CounterexampleReport counterexample_study(const KernelContext& ctx, std::span<const double> radii) {
  if (!(ctx.h_dot_a > 0.0)) throw Error(ErrorKind::BadConfig, "counterexample needs (h,a) > 0");
  if (std::abs(ctx.h_norm_sq - 1.0) > 1e-8) throw Error(ErrorKind::BadConfig, "counterexample needs ||h|| = 1");
  CounterexampleReport rep;
  rep.h_dot_a = ctx.h_dot_a;
  const double c = std::numbers::sqrt2 * ctx.h_dot_a / 4.0;
  rep.growth_rate = c;
  for (double r : radii)
    rep.rows.push_back({r, counterexample_partial(ctx, r), r > 0.0 ? counterexample_partial_closed(ctx.h_dot_a, r) : 0.0});
  const PsiFn psi = counterexample_psi(ctx.h_dot_a);
  const double amp = std::exp(0.5 * ctx.h_dot_a * ctx.h_dot_a);
  rep.psi_l1 = l1_norm(psi);
  rep.psi_l1_closed = amp / (c * c);
  rep.psi_sup = sup_norm(psi);
  rep.psi_sup_closed = amp / (c * std::numbers::e);
  return rep;
}

struct GaussianIdentity {
  cplx numeric{};
  cplx closed_form{};
  double rel_error() const { return std::abs(numeric - closed_form) / std::abs(closed_form); }
};

/// int exp{-alpha u^2 + beta u} du by quadrature against sqrt(pi/alpha) exp{beta^2/(4 alpha)}.
inline GaussianIdentity gaussian_identity_check(cplx alpha, cplx beta) {
  if (!(alpha.real() > 0.0)) throw Error(ErrorKind::InvalidParameter, "gaussian identity needs Re(alpha) > 0");
  GaussianIdentity g;
  g.closed_form = principal_sqrt(std::numbers::pi / alpha) * std::exp(beta * beta / (4.0 * alpha));
  const double ar = alpha.real(), br = beta.real();
  const double mode = br / (2.0 * ar), half = std::sqrt(60.0 / ar);
  const double lo = mode - half, hi = mode + half;
  auto rate = [&](double u) { return std::abs(-2.0 * alpha.imag() * u + beta.imag()); };
  const auto breaks = numint::phase_breaks(lo, hi, rate, 2.0 * std::numbers::pi, 16);
  // Factor out the real peak so large Re(beta^2)/(4 Re alpha) stays in range.
  const double peak = -ar * mode * mode + br * mode;
  auto f = [&](double u) { return std::exp(-alpha * u * u + beta * u - peak); };
  numint::Options o;
  o.rel_tol = 1e-13;
  o.abs_tol = 1e-16 * (hi - lo);
  o.max_panels = std::max<int>(200000, static_cast<int>(4 * breaks.size()));
  g.numeric = numint::integrate(f, breaks, o).value * std::exp(peak);
  return g;
}

}  // namespace cabfeyn
