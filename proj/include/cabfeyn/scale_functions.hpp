#pragma once

// The pair (a, b) that defines a generalized Brownian motion on [0, T]:
// mean function a, variance function b, their derivatives, and quadrature
// against dt, db and d|a|.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cabfeyn/error.hpp"
#include "cabfeyn/quadrature.hpp"

namespace cabfeyn {

using RealFn = std::function<double(double)>;

inline constexpr double origin_tolerance = 1e-12;
inline constexpr int default_grid_n = 1024;

/// Immutable description of the drift/variance pair. Construction never
/// validates; use validate() for a report or make_valid_scale_pair() to throw.
class ScalePair {
 public:
  ScalePair(double horizon, RealFn a, RealFn a_prime, RealFn b, RealFn b_prime,
            int grid_n = default_grid_n, std::string label = "custom")
      : horizon_(horizon),
        a_(std::move(a)),
        a_prime_(std::move(a_prime)),
        b_(std::move(b)),
        b_prime_(std::move(b_prime)),
        grid_n_(grid_n % 2 ? grid_n + 1 : grid_n),
        label_(std::move(label)) {
    if (!(horizon_ > 0.0)) throw Error(ErrorKind::InvalidParameter, "horizon T must be positive");
    if (grid_n_ < 2) throw Error(ErrorKind::InvalidGrid, "grid_n must be >= 2");
    const double h = horizon_ / grid_n_;
    nodes_.resize(grid_n_ + 1);
    a_prime_nodes_.resize(grid_n_ + 1);
    b_prime_nodes_.resize(grid_n_ + 1);
    for (int i = 0; i <= grid_n_; ++i) {
      const double t = (i == grid_n_) ? horizon_ : i * h;
      nodes_[i] = t;
      a_prime_nodes_[i] = a_prime_(t);
      b_prime_nodes_[i] = b_prime_(t);
    }
    weights_ = numint::simpson_weights(grid_n_, h);
    var_a_ = 0.0;
    for (int i = 0; i <= grid_n_; ++i) var_a_ += weights_[i] * std::abs(a_prime_nodes_[i]);
  }

  double horizon() const { return horizon_; }
  int grid_n() const { return grid_n_; }
  double step() const { return horizon_ / grid_n_; }
  const std::string& label() const { return label_; }

  double a(double t) const { return a_(t); }
  double a_prime(double t) const { return a_prime_(t); }
  double b(double t) const { return b_(t); }
  double b_prime(double t) const { return b_prime_(t); }

  const std::vector<double>& nodes() const { return nodes_; }
  /// Simpson weights for dt on nodes().
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& a_prime_nodes() const { return a_prime_nodes_; }
  const std::vector<double>& b_prime_nodes() const { return b_prime_nodes_; }

  /// Var(a) = |a|(T).
  double var_a() const { return var_a_; }

 private:
  double horizon_;
  RealFn a_, a_prime_, b_, b_prime_;
  int grid_n_;
  std::string label_;
  std::vector<double> nodes_, weights_, a_prime_nodes_, b_prime_nodes_;
  double var_a_ = 0.0;
};

using ScalePairPtr = std::shared_ptr<const ScalePair>;

enum class Measure { dt, db, dabs_a };

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  double drift_energy = 0.0;  // int |a'|^2 d|a|
  bool passed = true;
  std::optional<ErrorKind> first_failure;
};

/// Checks a(0)=b(0)=0, b' > 0 on every node, finite drift energy and
/// Var(a) >= 0.
inline ValidationReport validate(const ScalePair& sp) {
  ValidationReport rep;
  auto add = [&rep](std::string name, bool ok, double value, ErrorKind kind) {
    rep.checks.push_back({std::move(name), ok, value});
    if (!ok && rep.passed) {
      rep.passed = false;
      rep.first_failure = kind;
    }
  };
  const double a0 = sp.a(0.0), b0 = sp.b(0.0);
  add("a(0)=0", std::abs(a0) <= origin_tolerance, a0, ErrorKind::NonzeroOrigin);
  add("b(0)=0", std::abs(b0) <= origin_tolerance, b0, ErrorKind::NonzeroOrigin);
  double min_bp = sp.b_prime_nodes().front();
  for (double v : sp.b_prime_nodes()) min_bp = std::min(min_bp, v);
  add("b'(t)>0", min_bp > 0.0, min_bp, ErrorKind::NonPositiveVariance);
  double energy = 0.0;
  const auto& w = sp.weights();
  const auto& ap = sp.a_prime_nodes();
  for (std::size_t i = 0; i < w.size(); ++i) energy += w[i] * std::pow(std::abs(ap[i]), 3);
  rep.drift_energy = energy;
  add("int |a'|^2 d|a| < inf", std::isfinite(energy), energy, ErrorKind::InvalidParameter);
  add("Var(a)>=0", sp.var_a() >= 0.0 && std::isfinite(sp.var_a()), sp.var_a(), ErrorKind::InvalidParameter);
  return rep;
}

inline ScalePairPtr make_scale_pair(double horizon, RealFn a, RealFn a_prime, RealFn b, RealFn b_prime,
                                    int grid_n = default_grid_n, std::string label = "custom") {
  return std::make_shared<const ScalePair>(horizon, std::move(a), std::move(a_prime), std::move(b),
                                           std::move(b_prime), grid_n, std::move(label));
}

/// Builds the pair and throws the first failing condition's error kind.
inline ScalePairPtr make_valid_scale_pair(double horizon, RealFn a, RealFn a_prime, RealFn b, RealFn b_prime,
                                          int grid_n = default_grid_n, std::string label = "custom") {
  auto sp = make_scale_pair(horizon, std::move(a), std::move(a_prime), std::move(b), std::move(b_prime), grid_n,
                            std::move(label));
  const auto rep = validate(*sp);
  if (!rep.passed) {
    std::string failed;
    for (const auto& c : rep.checks)
      if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
    throw Error(*rep.first_failure, "scale pair '" + sp->label() + "' fails: " + failed);
  }
  return sp;
}

/// a = 0, b(t) = t.
inline ScalePairPtr wiener_preset(double horizon = 1.0, int grid_n = default_grid_n) {
  return make_valid_scale_pair(
      horizon, [](double) { return 0.0; }, [](double) { return 0.0; }, [](double t) { return t; },
      [](double) { return 1.0; }, grid_n, "wiener");
}

/// a(t) = alpha t, b(t) = t + beta t^2.
inline ScalePairPtr drifted_preset(double alpha, double beta, double horizon = 1.0, int grid_n = default_grid_n) {
  return make_valid_scale_pair(
      horizon, [alpha](double t) { return alpha * t; }, [alpha](double) { return alpha; },
      [beta](double t) { return t + beta * t * t; }, [beta](double t) { return 1.0 + 2.0 * beta * t; }, grid_n,
      "drifted");
}

namespace detail {
inline double density_of(const ScalePair& sp, Measure m, double t) {
  switch (m) {
    case Measure::dt: return 1.0;
    case Measure::db: return sp.b_prime(t);
    case Measure::dabs_a: return std::abs(sp.a_prime(t));
  }
  return 0.0;
}
}  // namespace detail

/// int_0^t g dmu for mu in {dt, db, d|a|} by composite Simpson with grid_n
/// panels on [0, t]. Works for real or complex g.
template <class G>
auto quad(const ScalePair& sp, G&& g, Measure m, double t) -> std::invoke_result_t<G&, double> {
  if (!(t >= 0.0 && t <= sp.horizon() * (1.0 + 1e-15)))
    throw Error(ErrorKind::OutOfDomain, "t=" + std::to_string(t) + " outside [0,T]");
  return numint::simpson([&](double s) { return g(s) * detail::density_of(sp, m, s); }, 0.0, t, sp.grid_n());
}

template <class G>
auto quad(const ScalePair& sp, G&& g, Measure m) -> std::invoke_result_t<G&, double> {
  return quad(sp, std::forward<G>(g), m, sp.horizon());
}

/// |a|(t) = int_0^t |a'(s)| ds.
inline double total_variation_a(const ScalePair& sp, double t) {
  return quad(sp, [](double) { return 1.0; }, Measure::dabs_a, t);
}

}  // namespace cabfeyn
