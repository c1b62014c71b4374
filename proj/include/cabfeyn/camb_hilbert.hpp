#pragma once

// The Hilbert space C'_{a,b}[0,T] of paths w(t) = int_0^t z db, stored by
// their density z = Dw. Inner product (w1, w2) = int z1 z2 db.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cabfeyn/error.hpp"
#include "cabfeyn/scale_functions.hpp"

namespace cabfeyn {

class CambElement {
 public:
  /// Element with density closure z.
  CambElement(ScalePairPtr sp, RealFn z, std::string label = {}) {
    auto impl = std::make_shared<Impl>();
    impl->sp = std::move(sp);
    impl->z = std::move(z);
    impl->label = std::move(label);
    const auto& t = impl->sp->nodes();
    impl->z_nodes.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) impl->z_nodes[i] = impl->z(t[i]);
    finish(*impl);
    impl_ = std::move(impl);
  }

  /// Element given by density samples on the scale pair's quadrature nodes.
  /// Off-node values use local cubic interpolation.
  static CambElement from_samples(ScalePairPtr sp, std::vector<double> z_nodes, std::string label = {}) {
    if (z_nodes.size() != sp->nodes().size())
      throw Error(ErrorKind::GridMismatch, "density samples do not match quadrature grid");
    auto samples = std::make_shared<const std::vector<double>>(std::move(z_nodes));
    const double h = sp->step();
    const int n = sp->grid_n();
    RealFn z = [samples, h, n](double t) {
      const auto& s = *samples;
      int k = static_cast<int>(std::floor(t / h));
      k = std::clamp(k - 1, 0, n - 3);
      const double x = t / h - k;  // position relative to node k, in [0, 3]
      const double f0 = s[k], f1 = s[k + 1], f2 = s[k + 2], f3 = s[k + 3];
      return f0 * (x - 1) * (x - 2) * (x - 3) / -6.0 + f1 * x * (x - 2) * (x - 3) / 2.0 +
             f2 * x * (x - 1) * (x - 3) / -2.0 + f3 * x * (x - 1) * (x - 2) / 6.0;
    };
    return CambElement(std::move(sp), std::move(z), std::move(label));
  }

  static CambElement zero(ScalePairPtr sp) {
    return CambElement(std::move(sp), [](double) { return 0.0; }, "zero");
  }

  const ScalePair& scale() const { return *impl_->sp; }
  const ScalePairPtr& scale_ptr() const { return impl_->sp; }
  const std::string& label() const { return impl_->label; }
  CambElement with_label(std::string label) const {
    CambElement copy = *this;
    auto impl = std::make_shared<Impl>(*impl_);
    impl->label = std::move(label);
    copy.impl_ = std::move(impl);
    return copy;
  }

  /// z(t) = Dw(t).
  double density(double t) const { return impl_->z(t); }
  const RealFn& density_fn() const { return impl_->z; }
  const std::vector<double>& density_nodes() const { return impl_->z_nodes; }
  /// w(t_i) on the quadrature nodes.
  const std::vector<double>& primitive_nodes() const { return impl_->w_nodes; }

  /// w(t) = int_0^t z db, cubic Hermite between nodes (w' = z b' is known).
  double primitive(double t) const {
    const auto& sp = *impl_->sp;
    const double h = sp.step();
    const int n = sp.grid_n();
    if (t <= 0.0) return 0.0;
    if (t >= sp.horizon()) return impl_->w_nodes.back();
    const int k = std::min(static_cast<int>(t / h), n - 1);
    const double s = (t - sp.nodes()[k]) / h;
    const double y0 = impl_->w_nodes[k], y1 = impl_->w_nodes[k + 1];
    const double d0 = impl_->z_nodes[k] * sp.b_prime_nodes()[k] * h;
    const double d1 = impl_->z_nodes[k + 1] * sp.b_prime_nodes()[k + 1] * h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1;
  }

  double norm_sq() const { return impl_->norm_sq; }
  double norm() const { return std::sqrt(impl_->norm_sq); }

  /// Identity of the underlying representation (copies share it).
  bool same_as(const CambElement& o) const { return impl_ == o.impl_; }

  friend CambElement operator*(double c, const CambElement& w) {
    const RealFn z = w.impl_->z;
    return CambElement(w.impl_->sp, [z, c](double t) { return c * z(t); });
  }
  friend CambElement operator+(const CambElement& u, const CambElement& v) {
    require_same(u, v);
    const RealFn zu = u.impl_->z, zv = v.impl_->z;
    return CambElement(u.impl_->sp, [zu, zv](double t) { return zu(t) + zv(t); });
  }
  friend CambElement operator-(const CambElement& u, const CambElement& v) { return u + (-1.0) * v; }

  static void require_same(const CambElement& u, const CambElement& v) {
    if (u.impl_->sp != v.impl_->sp)
      throw Error(ErrorKind::MismatchedScalePair, "elements live on different scale pairs");
  }

 private:
  struct Impl {
    ScalePairPtr sp;
    RealFn z;
    std::string label;
    std::vector<double> z_nodes, w_nodes;
    double norm_sq = 0.0;
  };

  // Cumulative int_0^{t_i} z db: composite Simpson at even nodes, plus a
  // one-interval quadratic rule to reach odd nodes.
  static void finish(Impl& impl) {
    const auto& sp = *impl.sp;
    const int n = sp.grid_n();
    const double h = sp.step();
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = impl.z_nodes[i] * sp.b_prime_nodes()[i];
    impl.w_nodes.assign(n + 1, 0.0);
    for (int i = 2; i <= n; i += 2)
      impl.w_nodes[i] = impl.w_nodes[i - 2] + h / 3.0 * (g[i - 2] + 4.0 * g[i - 1] + g[i]);
    for (int i = 1; i <= n; i += 2)
      impl.w_nodes[i] = impl.w_nodes[i - 1] + h / 12.0 * (5.0 * g[i - 1] + 8.0 * g[i] - g[i + 1]);
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) acc += sp.weights()[i] * impl.z_nodes[i] * g[i];
    impl.norm_sq = acc;
  }

  std::shared_ptr<const Impl> impl_;
};

/// D: returns the density z = Dw of an element.
inline RealFn d_op(const CambElement& w) { return w.density_fn(); }

/// D applied to a path given by closures for w and w': z = w'/b'.
inline RealFn d_op(const ScalePairPtr& sp, RealFn /*w*/, RealFn w_prime) {
  return [sp, w_prime = std::move(w_prime)](double t) { return w_prime(t) / sp->b_prime(t); };
}

/// D^{-1}: the element whose density is z.
inline CambElement d_inv(const ScalePairPtr& sp, RealFn z, std::string label = {}) {
  return CambElement(sp, std::move(z), std::move(label));
}

/// (w1, w2)_{C'} = int z1 z2 db.
inline double inner(const CambElement& w1, const CambElement& w2) {
  CambElement::require_same(w1, w2);
  const auto& sp = w1.scale();
  const auto& z1 = w1.density_nodes();
  const auto& z2 = w2.density_nodes();
  double acc = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) acc += sp.weights()[i] * z1[i] * z2[i] * sp.b_prime_nodes()[i];
  return acc;
}

/// (w, a)_{C'} = int z da = int z a' dt.
inline double pair_with_a(const CambElement& w) {
  const auto& sp = w.scale();
  const auto& z = w.density_nodes();
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += sp.weights()[i] * z[i] * sp.a_prime_nodes()[i];
  return acc;
}

/// The drift a itself as an element of C' (density a'/b').
inline CambElement drift_element(const ScalePairPtr& sp) {
  return CambElement(sp, [sp](double t) { return sp->a_prime(t) / sp->b_prime(t); }, "a");
}

/// ||a||_{C'}.
inline double drift_norm(const ScalePairPtr& sp) {
  double acc = 0.0;
  for (std::size_t i = 0; i < sp->nodes().size(); ++i) {
    const double ap = sp->a_prime_nodes()[i];
    acc += sp->weights()[i] * ap * ap / sp->b_prime_nodes()[i];
  }
  return std::sqrt(acc);
}

/// e1 = h/||h||, w = proj e1 + beta_w e2.
struct GramSchmidtPair {
  CambElement e1;
  double proj = 0.0;
  double beta_w = 0.0;
  std::optional<CambElement> e2;  // empty in the parallel case
};

/// beta_w below this fraction of ||w|| is treated as w parallel to h.
inline constexpr double parallel_tolerance = 1e-10;

inline GramSchmidtPair gram_schmidt_pair(const CambElement& h, const CambElement& w) {
  CambElement::require_same(h, w);
  const double hn = h.norm();
  if (!(hn > 0.0)) throw Error(ErrorKind::ZeroDirection, "h must be nonzero in C'");
  GramSchmidtPair gs{(1.0 / hn) * h, 0.0, 0.0, std::nullopt};
  gs.proj = inner(w, h) / hn;
  gs.beta_w = std::sqrt(std::max(0.0, w.norm_sq() - gs.proj * gs.proj));
  if (gs.beta_w > parallel_tolerance * w.norm() && gs.beta_w > 0.0)
    gs.e2 = (1.0 / gs.beta_w) * (w - gs.proj * gs.e1);
  else
    gs.beta_w = 0.0;
  return gs;
}

/// S* w(t) = int_0^t (w(T) - w(s)) db(s); density w(T) - w(t).
inline CambElement s_star(const CambElement& w) {
  const double wT = w.primitive_nodes().back();
  return CambElement(w.scale_ptr(), [w, wT](double t) { return wT - w.primitive(t); },
                     w.label().empty() ? "S*w" : "S*" + w.label());
}

/// Named directions: b, b_unit, s_star_b, s_star_b_unit, a, a_unit, zero,
/// monomial:k (z = t^k) and monomial_unit:k.
inline CambElement direction_preset(const ScalePairPtr& sp, const std::string& name) {
  auto unit = [&name](const CambElement& w) {
    if (!(w.norm() > 0.0)) throw Error(ErrorKind::ZeroDirection, "direction '" + name + "' has zero norm");
    return ((1.0 / w.norm()) * w).with_label(name);
  };
  const CambElement b(sp, [](double) { return 1.0; }, "b");
  if (name == "b") return b;
  if (name == "b_unit") return unit(b);
  if (name == "s_star_b") return s_star(b).with_label(name);
  if (name == "s_star_b_unit") return unit(s_star(b));
  if (name == "a") return drift_element(sp);
  if (name == "a_unit") return unit(drift_element(sp));
  if (name == "zero") return CambElement::zero(sp);
  for (const std::string prefix : {"monomial:", "monomial_unit:"}) {
    if (name.rfind(prefix, 0) == 0) {
      double k = 0.0;
      try {
        k = std::stod(name.substr(prefix.size()));
      } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, "bad monomial exponent in '" + name + "'");
      }
      CambElement m(sp, [k](double t) { return k == 0.0 ? 1.0 : std::pow(t, k); }, name);
      return prefix == std::string("monomial:") ? m : unit(m);
    }
  }
  throw Error(ErrorKind::ConfigError, "unknown direction preset '" + name + "'");
}

}  // namespace cabfeyn
