#pragma once

// Sample paths of the generalized Brownian motion, PWZ integrals along them,
// and the finite-dimensional Gaussian formula for cylinder functionals.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "cabfeyn/camb_hilbert.hpp"
#include "cabfeyn/error.hpp"
#include "cabfeyn/parallel.hpp"
#include "cabfeyn/quadrature.hpp"

namespace cabfeyn {

/// A reproducible random stream: identical (seed, stream_id) pairs yield
/// identical draws.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::mt19937_64 engine() const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x9e3779b9u};
    return std::mt19937_64(seq);
  }
};

struct GbmpPath {
  ScalePairPtr sp;
  std::vector<double> t;  // 0 = t_0 < ... < t_N = T
  std::vector<double> x;  // x(t_0) = 0
};

inline constexpr int default_path_steps = 1024;

/// Draws successive paths on a uniform grid of `steps` steps. Increments
/// are N(a(t_{i+1}) - a(t_i), b(t_{i+1}) - b(t_i)).
class PathSampler {
 public:
  PathSampler(ScalePairPtr sp, int steps, RngStream stream)
      : sp_(std::move(sp)), engine_(stream.engine()) {
    if (steps < 1) throw Error(ErrorKind::InvalidGrid, "path grid needs at least one step");
    t_.resize(steps + 1);
    mean_.resize(steps);
    sd_.resize(steps);
    const double T = sp_->horizon();
    for (int i = 0; i <= steps; ++i) t_[i] = (i == steps) ? T : T * i / steps;
    for (int i = 0; i < steps; ++i) {
      mean_[i] = sp_->a(t_[i + 1]) - sp_->a(t_[i]);
      const double var = sp_->b(t_[i + 1]) - sp_->b(t_[i]);
      if (!(var > 0.0)) throw Error(ErrorKind::NonPositiveVariance, "b must increase along the path grid");
      sd_[i] = std::sqrt(var);
    }
  }

  int steps() const { return static_cast<int>(mean_.size()); }
  const std::vector<double>& times() const { return t_; }

  /// Fills `dx` with one path's increments.
  void next_increments(std::span<double> dx) {
    for (std::size_t i = 0; i < mean_.size(); ++i) dx[i] = mean_[i] + sd_[i] * normal_(engine_);
  }

  GbmpPath next_path() {
    GbmpPath p{sp_, t_, std::vector<double>(t_.size(), 0.0)};
    std::vector<double> dx(mean_.size());
    next_increments(dx);
    for (std::size_t i = 0; i < dx.size(); ++i) p.x[i + 1] = p.x[i] + dx[i];
    return p;
  }

 private:
  ScalePairPtr sp_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::vector<double> t_, mean_, sd_;
};

inline GbmpPath sample_path(const ScalePairPtr& sp, int steps, const RngStream& rng) {
  return PathSampler(sp, steps, rng).next_path();
}

/// Density of w at the left end of every path interval.
inline std::vector<double> density_on_grid(const CambElement& w, const std::vector<double>& t) {
  std::vector<double> z(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) z[i] = w.density(t[i]);
  return z;
}

/// (w, x)~ as the left-point Riemann-Stieltjes sum  sum z(t_i)(x(t_{i+1}) - x(t_i)).
inline double pwz(const CambElement& w, const GbmpPath& x) {
  if (w.scale_ptr() != x.sp) throw Error(ErrorKind::GridMismatch, "element and path use different scale pairs");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < x.t.size(); ++i) acc += w.density(x.t[i]) * (x.x[i + 1] - x.x[i]);
  return acc;
}

/// PWZ values of several directions over many independent paths.
/// values[p * directions.size() + k] = (directions[k], x_p)~.
struct PwzSample {
  std::vector<CambElement> directions;
  std::vector<double> values;
  std::size_t n_paths = 0;

  std::size_t width() const { return directions.size(); }
  double at(std::size_t path, std::size_t dir) const { return values[path * directions.size() + dir]; }
  std::span<const double> row(std::size_t path) const {
    return {values.data() + path * directions.size(), directions.size()};
  }
  /// Column index of a direction (by identity), or -1.
  long find(const CambElement& w) const {
    for (std::size_t k = 0; k < directions.size(); ++k)
      if (directions[k].same_as(w)) return static_cast<long>(k);
    return -1;
  }
};

inline constexpr std::size_t default_stream_count = 64;

/// Samples n_paths paths split over `streams` RNG streams (seed, 0..streams-1)
/// and records the PWZ integral of every direction. Stream s owns a fixed,
/// contiguous block of path indices, so the output is independent of how
/// many threads run.
inline PwzSample sample_pwz(const ScalePairPtr& sp, std::vector<CambElement> directions, std::size_t n_paths,
                            int steps, std::uint64_t seed, std::size_t streams = default_stream_count) {
  for (const auto& d : directions)
    if (d.scale_ptr() != sp) throw Error(ErrorKind::GridMismatch, "direction uses a different scale pair");
  streams = std::max<std::size_t>(1, std::min(streams, std::max<std::size_t>(1, n_paths)));
  PwzSample out{std::move(directions), {}, n_paths};
  const std::size_t k = out.directions.size();
  out.values.assign(n_paths * k, 0.0);
  // Probe the grid once to get the node times.
  const std::vector<double> times = PathSampler(sp, steps, RngStream{seed, 0}).times();
  std::vector<std::vector<double>> z;
  z.reserve(k);
  for (const auto& d : out.directions) z.push_back(density_on_grid(d, times));
  const std::size_t chunk = (n_paths + streams - 1) / streams;
  parallel_for(streams, [&](std::size_t s) {
    const std::size_t first = s * chunk, last = std::min(n_paths, first + chunk);
    if (first >= last) return;
    PathSampler sampler(sp, steps, RngStream{seed, s});
    std::vector<double> dx(steps);
    for (std::size_t p = first; p < last; ++p) {
      sampler.next_increments(dx);
      for (std::size_t j = 0; j < k; ++j) {
        const auto& zj = z[j];
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) acc += zj[i] * dx[i];
        out.values[p * k + j] = acc;
      }
    }
  });
  return out;
}

/// Gauss-Hermite nodes per dimension used by cylinder_expectation.
inline int cylinder_nodes(std::size_t dims) { return dims == 1 ? 96 : dims == 2 ? 48 : 24; }

/// E[r((e_1,x)~, ..., (e_n,x)~)] for an orthonormal list e (n <= 3), via the
/// product of independent N((e_j,a), 1) laws and tensor Gauss-Hermite.
inline cplx cylinder_expectation(const std::function<cplx(std::span<const double>)>& r,
                                 const std::vector<CambElement>& e, int nodes = 0) {
  const std::size_t n = e.size();
  if (n == 0) return r({});
  if (n > 3) throw Error(ErrorKind::InvalidParameter, "cylinder_expectation supports n <= 3");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double g = inner(e[i], e[j]);
      if (std::abs(g - (i == j ? 1.0 : 0.0)) > 1e-6)
        throw Error(ErrorKind::NotOrthonormal, "Gram matrix entry (" + std::to_string(i) + "," + std::to_string(j) +
                                                   ") = " + std::to_string(g));
    }
  if (nodes <= 0) nodes = cylinder_nodes(n);
  const auto& rule = numint::gauss_hermite_cached(nodes);
  std::vector<double> mean(n);
  for (std::size_t j = 0; j < n; ++j) mean[j] = pair_with_a(e[j]);
  std::vector<int> idx(n, 0);
  std::vector<double> u(n);
  cplx acc{};
  while (true) {
    double weight = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      u[j] = mean[j] + std::numbers::sqrt2 * rule.nodes[idx[j]];
      weight *= rule.weights[idx[j]] / std::sqrt(std::numbers::pi);
    }
    acc += weight * r(u);
    std::size_t j = 0;
    while (j < n && ++idx[j] == nodes) idx[j++] = 0;
    if (j == n) break;
  }
  return acc;
}

}  // namespace cabfeyn
