#pragma once

// One-dimensional quadrature primitives shared by every module: composite
// Simpson on uniform grids, globally adaptive Gauss-Kronrod (7/15) for
// complex integrands, Gauss-Hermite rules, and a truncation finder for
// log-concave envelopes.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <type_traits>
#include <vector>

#include "cabfeyn/error.hpp"

namespace cabfeyn {

using cplx = std::complex<double>;

namespace numint {

/// Composite Simpson rule with `panels` (forced even) uniform panels on [lo, hi].
template <class F>
auto simpson(F&& f, double lo, double hi, int panels) -> std::invoke_result_t<F&, double> {
  using R = std::invoke_result_t<F&, double>;
  if (panels < 2) panels = 2;
  if (panels % 2) ++panels;
  const double h = (hi - lo) / panels;
  R odd{}, even{};
  for (int i = 1; i < panels; ++i) {
    const R v = f(lo + i * h);
    if (i % 2)
      odd += v;
    else
      even += v;
  }
  return (h / 3.0) * (f(lo) + f(hi) + 4.0 * odd + 2.0 * even);
}

/// Composite Simpson weights for `panels` (even) uniform panels of width h.
inline std::vector<double> simpson_weights(int panels, double h) {
  std::vector<double> w(static_cast<std::size_t>(panels) + 1);
  for (int i = 0; i <= panels; ++i) w[i] = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& x : w) x *= h / 3.0;
  return w;
}

struct Result {
  cplx value{};
  double error = 0.0;
  long evals = 0;
  int panels = 0;
  bool converged = true;
};

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  int initial_panels = 1;
  int max_panels = 200000;
};

namespace detail {

// Kronrod abscissae (descending, last is the centre) and weights; Gauss
// weights pair with xgk[1], xgk[3], xgk[5], xgk[7].
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo, hi;
  cplx value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
  const cplx fc = f(c);
  cplx kron = wgk[7] * fc;
  cplx gauss = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = r * xgk[j];
    const cplx s = cplx(f(c - dx)) + cplx(f(c + dx));
    kron += wgk[j] * s;
    if (j % 2 == 1) gauss += wg[j / 2] * s;
  }
  return {lo, hi, kron * r, std::abs((kron - gauss) * r)};
}

}  // namespace detail

/// Globally adaptive G7/K15 integration of a real- or complex-valued f over
/// the panels delimited by `breaks` (ascending). The panel with the largest
/// error estimate is bisected until the summed error meets
/// max(abs_tol, rel_tol * |I|).
template <class F>
Result integrate(F&& f, const std::vector<double>& breaks, const Options& opt = {}) {
  Result res;
  if (breaks.size() < 2) return res;
  std::priority_queue<detail::Panel> heap;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (breaks[i + 1] > breaks[i]) heap.push(detail::gk15(f, breaks[i], breaks[i + 1]));
  res.evals = 15L * static_cast<long>(heap.size());
  auto totals = [&heap] {
    auto copy = heap;
    cplx v{};
    double e = 0.0;
    while (!copy.empty()) {
      v += copy.top().value;
      e += copy.top().error;
      copy.pop();
    }
    return std::pair{v, e};
  };
  // Running sums drift; they only steer refinement. The reported value is
  // re-summed from the final panel set.
  auto [value, error] = totals();
  const int max_panels = std::max(opt.max_panels, static_cast<int>(heap.size()));
  while (!heap.empty() && error > std::max(opt.abs_tol, opt.rel_tol * std::abs(value))) {
    if (static_cast<int>(heap.size()) >= max_panels) {
      res.converged = false;
      break;
    }
    const detail::Panel worst = heap.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      res.converged = false;
      break;
    }
    heap.pop();
    const auto left = detail::gk15(f, worst.lo, mid);
    const auto right = detail::gk15(f, mid, worst.hi);
    res.evals += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  std::tie(res.value, res.error) = totals();
  res.panels = static_cast<int>(heap.size());
  return res;
}

/// Uniform cut of [lo, hi] into n panels.
inline std::vector<double> uniform_breaks(double lo, double hi, int n) {
  n = std::max(1, n);
  std::vector<double> b(n + 1);
  for (int i = 0; i <= n; ++i) b[i] = (i == n) ? hi : lo + (hi - lo) * i / n;
  return b;
}

/// Adaptive integration on [lo, hi] starting from opt.initial_panels equal panels.
template <class F>
Result integrate(F&& f, double lo, double hi, const Options& opt = {}) {
  if (!(hi > lo)) return {};
  return integrate(std::forward<F>(f), uniform_breaks(lo, hi, std::min(opt.initial_panels, opt.max_panels)), opt);
}

/// Breakpoints on [lo, hi] such that a phase with local rate bound
/// rate(u) >= |dphi/du| advances by at most `max_phase` per panel, with at
/// least `min_panels` panels and at most `max_panels`.
template <class Rate>
std::vector<double> phase_breaks(double lo, double hi, Rate&& rate, double max_phase, int min_panels = 4,
                                 int max_panels = 400000) {
  const double cap = (hi - lo) / std::max(1, min_panels);
  const double floor_step = (hi - lo) / std::max(1, max_panels);
  std::vector<double> b{lo};
  double u = lo;
  while (u < hi) {
    double step = cap;
    const double r0 = rate(u);
    if (r0 > 0.0) step = std::min(step, max_phase / r0);
    const double r1 = rate(std::min(hi, u + step));
    if (r1 > 0.0) step = std::min(step, max_phase / r1);
    step = std::max(step, floor_step);
    u = (u + step >= hi - 1e-12 * (hi - lo)) ? hi : u + step;
    b.push_back(u);
  }
  return b;
}

/// Nodes and weights of an n-point rule.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line, computed
/// by Newton iteration on the normalised Hermite recurrence.
inline Rule gauss_hermite(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "Gauss-Hermite order must be >= 1");
  constexpr double pim4 = 0.7511255444649425;  // pi^{-1/4}
  Rule r;
  r.nodes.assign(n, 0.0);
  r.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[1];
    else
      z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    r.weights[i] = 2.0 / (pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  return r;
}

/// Process-wide cache of Gauss-Hermite rules keyed by order.
inline const Rule& gauss_hermite_cached(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_hermite(n)).first;
  return it->second;
}

/// E[g(m + s Z)] for Z ~ N(0,1) with an n-point Gauss-Hermite rule.
template <class G>
auto gaussian_expectation(G&& g, double mean, double sd, int n = 64) -> std::invoke_result_t<G&, double> {
  using R = std::invoke_result_t<G&, double>;
  const Rule& r = gauss_hermite_cached(n);
  R acc{};
  for (int i = 0; i < n; ++i) acc += r.weights[i] * g(mean + std::numbers::sqrt2 * sd * r.nodes[i]);
  return acc / std::sqrt(std::numbers::pi);
}

struct Support {
  double lo = 0.0, hi = 0.0;
  double mode = 0.0;
  double peak = 0.0;  // logf(mode)
};

/// Interval outside of which a log-concave function `logf` has dropped more
/// than `drop` below its maximum over [lo, hi], clipped to [lo, hi].
template <class LogF>
Support log_concave_support(LogF&& logf, double lo, double hi, double drop = 40.0) {
  // Ternary search for the mode.
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 1e-9 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (logf(m1) < logf(m2))
      a = m1;
    else
      b = m2;
  }
  const double mode = 0.5 * (a + b);
  const double peak = logf(mode);
  const double cut = peak - drop;
  auto edge = [&](double dir, double bound) {
    double step = 1e-3 * std::max(1.0, std::abs(mode));
    double inside = mode, x = mode;
    while (true) {
      x = mode + dir * step;
      if ((dir > 0 && x >= bound) || (dir < 0 && x <= bound)) return bound;
      if (logf(x) < cut) break;
      inside = x;
      step *= 2.0;
    }
    double in = inside, out = x;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (in + out);
      if (logf(mid) < cut)
        out = mid;
      else
        in = mid;
    }
    return out;
  };
  return {edge(-1.0, lo), edge(1.0, hi), mode, peak};
}

}  // namespace numint
}  // namespace cabfeyn
