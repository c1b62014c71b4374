#pragma once

// Finite complex measures f on C'_{a,b} and the functionals
//   F(x) = int exp{i (w,x)~} df(w)
// they induce. Two representable families: finitely many atoms, and the
// pushforward of a one-dimensional measure eta along a line v -> v w0.

#include <cmath>
#include <complex>
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
#include "cabfeyn/gbmp_sampler.hpp"
#include "cabfeyn/kernel.hpp"
#include "cabfeyn/quadrature.hpp"

namespace cabfeyn {

struct Atom {
  cplx weight;
  CambElement w;
};

struct Atoms {
  std::vector<Atom> atoms;
};

/// One-dimensional measures eta on R.
struct Atoms1D {
  std::vector<std::pair<double, cplx>> points;  // (v_j, c_j)
};

/// scale * N(mean, variance).
struct GaussianEta {
  double mean = 0.0;
  double variance = 1.0;
  cplx scale = 1.0;
};

/// eta(dv) = density(v) dv, integrated on [-radius, radius].
struct DensityEta {
  std::function<cplx(double)> density;
  double radius = 10.0;
};

using OneDimMeasure = std::variant<Atoms1D, GaussianEta, DensityEta>;

struct LinePushforward {
  CambElement direction;  // w0
  OneDimMeasure eta;
};

using SpectralMeasure = std::variant<Atoms, LinePushforward>;

struct FresnelFunctional {
  SpectralMeasure f;
  std::string label;
};

inline constexpr double density_tail_tolerance = 1e-8;

namespace detail {

inline numint::Options density_quad_options(double phase_span) {
  numint::Options o;
  o.rel_tol = 1e-12;
  o.abs_tol = 1e-15;
  o.initial_panels = std::max(8, static_cast<int>(std::ceil(phase_span / (std::numbers::pi / 4))));
  return o;
}

inline double density_mass(const DensityEta& d, double lo, double hi) {
  return numint::integrate([&](double v) { return std::abs(d.density(v)); }, lo, hi, density_quad_options(0.0))
      .value.real();
}

/// Mass of |eta| in the probe annulus R < |v| < 4R; stands in for the tail
/// discarded by truncation at R.
inline double density_tail_probe(const DensityEta& d) {
  const double r = d.radius;
  return density_mass(d, r, 4 * r) + density_mass(d, -4 * r, -r);
}

}  // namespace detail

/// eta-hat(u) = int exp{i u v} d eta(v).
inline cplx eta_transform(const OneDimMeasure& eta, double u) {
  return std::visit(
      [u](const auto& m) -> cplx {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Atoms1D>) {
          cplx acc{};
          for (const auto& [v, c] : m.points) acc += c * std::exp(cplx(0.0, u * v));
          return acc;
        } else if constexpr (std::is_same_v<M, GaussianEta>) {
          return m.scale * std::exp(cplx(-0.5 * m.variance * u * u, m.mean * u));
        } else {
          const double r = m.radius;
          return numint::integrate([&](double v) { return m.density(v) * std::exp(cplx(0.0, u * v)); }, -r, r,
                                 detail::density_quad_options(2 * r * std::abs(u)))
              .value;
        }
      },
      eta);
}

/// Directions whose PWZ integrals determine F.
inline std::vector<CambElement> directions_of(const SpectralMeasure& f) {
  if (const auto* a = std::get_if<Atoms>(&f)) {
    std::vector<CambElement> d;
    for (const auto& atom : a->atoms) d.push_back(atom.w);
    return d;
  }
  return {std::get<LinePushforward>(f).direction};
}

/// F(scale * x) given pwz[k] = (directions_of(f)[k], x)~.
inline cplx eval_from_pwz(const SpectralMeasure& f, std::span<const double> pwz_values, double scale = 1.0) {
  if (const auto* a = std::get_if<Atoms>(&f)) {
    cplx acc{};
    for (std::size_t j = 0; j < a->atoms.size(); ++j)
      acc += a->atoms[j].weight * std::exp(cplx(0.0, scale * pwz_values[j]));
    return acc;
  }
  return eta_transform(std::get<LinePushforward>(f).eta, scale * pwz_values[0]);
}

/// Complex-scale version: F(lambda^{-1/2} x) with complex lambda^{-1/2}.
inline cplx eval_from_pwz(const SpectralMeasure& f, std::span<const double> pwz_values, cplx scale) {
  if (scale.imag() == 0.0) return eval_from_pwz(f, pwz_values, scale.real());
  if (const auto* a = std::get_if<Atoms>(&f)) {
    cplx acc{};
    for (std::size_t j = 0; j < a->atoms.size(); ++j)
      acc += a->atoms[j].weight * std::exp(cplx(0.0, 1.0) * scale * pwz_values[j]);
    return acc;
  }
  throw Error(ErrorKind::UnsupportedVariant, "complex scaling only supported for atomic measures");
}

inline cplx eval_F(const FresnelFunctional& F, const GbmpPath& x) {
  const auto* line = std::get_if<LinePushforward>(&F.f);
  if (const auto* d = line ? std::get_if<DensityEta>(&line->eta) : nullptr) {
    const double tail = detail::density_tail_probe(*d);
    const double core = detail::density_mass(*d, -d->radius, d->radius);
    if (tail > density_tail_tolerance * core)
      throw Error(ErrorKind::MeasureUnderflow, "density truncation at R=" + std::to_string(d->radius) +
                                                   " discards " + std::to_string(tail / core) + " of |eta|");
  }
  const auto dirs = directions_of(F.f);
  std::vector<double> p(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) p[k] = pwz(dirs[k], x);
  return eval_from_pwz(F.f, p);
}

/// Total variation |eta|(R) of a one-dimensional measure.
inline double total_norm(const OneDimMeasure& eta) {
  return std::visit(
      [](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Atoms1D>) {
          double acc = 0.0;
          for (const auto& pt : m.points) acc += std::abs(pt.second);
          return acc;
        } else if constexpr (std::is_same_v<M, GaussianEta>) {
          return std::abs(m.scale);
        } else {
          return detail::density_mass(m, -m.radius, m.radius);
        }
      },
      eta);
}

/// ||f|| = |f|(C'), which is also ||F||.
inline double total_norm(const SpectralMeasure& f) {
  if (const auto* a = std::get_if<Atoms>(&f)) {
    double acc = 0.0;
    for (const auto& atom : a->atoms) acc += std::abs(atom.weight);
    return acc;
  }
  return total_norm(std::get<LinePushforward>(f).eta);
}

struct KqResult {
  double value = 0.0;  // int k(q0; w) d|f|(w); +inf when divergent
  bool member = true;  // F in F^{q0}
};

/// int k(q0;w) d|f|(w) and the F^{q0} membership flag. For line measures
/// this is int exp{(2q0)^{-1/2} ||w0|| ||a|| |v|} d|eta|(v).
inline KqResult kq0_integral(const SpectralMeasure& f, double q0) {
  if (!(q0 > 0.0)) throw Error(ErrorKind::InvalidParameter, "q0 must be positive");
  if (const auto* a = std::get_if<Atoms>(&f)) {
    KqResult r;
    for (const auto& atom : a->atoms) r.value += std::abs(atom.weight) * kernel_k(q0, atom.w);
    return r;
  }
  const auto& line = std::get<LinePushforward>(f);
  const double c = line.direction.norm() * drift_norm(line.direction.scale_ptr()) / std::sqrt(2.0 * q0);
  return std::visit(
      [c](const auto& m) -> KqResult {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Atoms1D>) {
          KqResult r;
          for (const auto& [v, w] : m.points) r.value += std::abs(w) * std::exp(c * std::abs(v));
          return r;
        } else if constexpr (std::is_same_v<M, GaussianEta>) {
          // E exp{c|V|}, V ~ N(m, s^2), in closed form.
          const double s = std::sqrt(m.variance), mu = m.mean;
          auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
          const double val = std::exp(c * mu + 0.5 * c * c * m.variance) * Phi((mu + c * m.variance) / s) +
                             std::exp(-c * mu + 0.5 * c * c * m.variance) * Phi((-mu + c * m.variance) / s);
          return {std::abs(m.scale) * val, true};
        } else {
          const double r = m.radius;
          auto weighted = [&](double v) { return std::exp(c * std::abs(v)) * std::abs(m.density(v)); };
          // Tail check: the weighted density must decay past R.
          const bool decays = weighted(2 * r) < weighted(r) && weighted(-2 * r) < weighted(-r);
          if (!decays) return {std::numeric_limits<double>::infinity(), false};
          numint::Options o = detail::density_quad_options(0.0);
          const double core = numint::integrate(weighted, -r, 0.0, o).value.real() +
                              numint::integrate(weighted, 0.0, r, o).value.real();
          return {core, std::isfinite(core)};
        }
      },
      line.eta);
}

/// f * g for atomic measures: atoms (c_j d_k, w_j + w_k).
inline Atoms convolve(const SpectralMeasure& f, const SpectralMeasure& g) {
  const auto* fa = std::get_if<Atoms>(&f);
  const auto* ga = std::get_if<Atoms>(&g);
  if (!fa || !ga) throw Error(ErrorKind::UnsupportedVariant, "convolution is implemented for atomic measures only");
  Atoms out;
  out.atoms.reserve(fa->atoms.size() * ga->atoms.size());
  for (const auto& x : fa->atoms)
    for (const auto& y : ga->atoms) {
      // Keep identity elements as-is so the zero atom is a true unit.
      const bool xz = x.w.norm_sq() == 0.0, yz = y.w.norm_sq() == 0.0;
      out.atoms.push_back({x.weight * y.weight, xz ? y.w : (yz ? x.w : x.w + y.w)});
    }
  return out;
}

/// Parameters for the example functionals F1..F4.
struct GalleryParams {
  std::optional<CambElement> w0;
  std::optional<OneDimMeasure> eta;  // F1
  double m = 0.0;                    // F2
  double sigma2 = 1.0;               // F2
};

/// F1 = eta-hat((w0,x)~); F2 = F1 with Gaussian eta(m, sigma2);
/// F3 = F2 with w0 = S*b, m = 0, sigma2 = 2; F4 = Dirac at S*b;
/// "one" = Dirac at 0 (F = 1).
inline FresnelFunctional gallery(const std::string& name, const ScalePairPtr& sp, const GalleryParams& p = {}) {
  if (name == "one") return {Atoms{{{1.0, CambElement::zero(sp)}}}, "one"};
  if (name == "F4") return {Atoms{{{1.0, direction_preset(sp, "s_star_b")}}}, "F4"};
  if (name == "F3") return {LinePushforward{direction_preset(sp, "s_star_b"), GaussianEta{0.0, 2.0}}, "F3"};
  if (name == "F1" || name == "F2") {
    if (!p.w0) throw Error(ErrorKind::InvalidParameter, name + " needs a direction w0");
    if (p.w0->scale_ptr() != sp) throw Error(ErrorKind::MismatchedScalePair, name + ": w0 on another scale pair");
    if (name == "F1") {
      if (!p.eta) throw Error(ErrorKind::InvalidParameter, "F1 needs a measure eta");
      return {LinePushforward{*p.w0, *p.eta}, "F1"};
    }
    if (!(p.sigma2 > 0.0)) throw Error(ErrorKind::InvalidParameter, "F2 needs sigma2 > 0");
    return {LinePushforward{*p.w0, GaussianEta{p.m, p.sigma2}}, "F2"};
  }
  throw Error(ErrorKind::UnknownExample, "no gallery functional named '" + name + "'");
}

}  // namespace cabfeyn
