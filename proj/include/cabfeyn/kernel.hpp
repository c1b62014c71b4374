#pragma once

// Scalar kernels of the closed-form operator K_lambda(F;h):
//   M = (lambda / (2 pi ||h||^2))^{1/2}
//   V = exp{[(i lambda (v-xi) + (h,w))^2 - ||h||^2 ||w||^2] / (2 lambda ||h||^2)}
//   L = exp{lambda (v-xi)^2 / (2 ||h||^2)}
//   H = exp{-(sqrt(lambda) (v-xi) - (h,a))^2 / (2 ||h||^2)}
//   A = exp{i lambda^{-1/2} beta_w (e2(w), a)}
// plus the bounds S(lambda;h), k(q0;w) and the admissible region Gamma_q0.
// Every kernel is available as its exponent (log_*) so products can be
// formed before exponentiating.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "cabfeyn/camb_hilbert.hpp"
#include "cabfeyn/error.hpp"

namespace cabfeyn {

/// Square root with positive real part.
inline cplx principal_sqrt(cplx lambda) {
  if (lambda == cplx(0.0, 0.0)) throw Error(ErrorKind::ZeroLambda, "lambda must be nonzero");
  cplx r = std::sqrt(lambda);
  if (r.real() < 0.0 || (r.real() == 0.0 && r.imag() < 0.0)) r = -r;
  return r;
}

/// A nonzero complex parameter with Re(lambda) >= 0 and its cached roots.
class LambdaParam {
 public:
  explicit LambdaParam(cplx lambda) : value_(lambda) {
    if (lambda == cplx(0.0, 0.0)) throw Error(ErrorKind::ZeroLambda, "lambda must be nonzero");
    if (lambda.real() < 0.0)
      throw Error(ErrorKind::NotAdmissible, "lambda must have nonnegative real part");
    root_ = principal_sqrt(lambda);
    inv_root_ = 1.0 / root_;
  }
  LambdaParam(double lambda) : LambdaParam(cplx(lambda, 0.0)) {}

  /// lambda = -i q.
  static LambdaParam feynman(double q) {
    if (q == 0.0) throw Error(ErrorKind::ZeroLambda, "q must be nonzero");
    return LambdaParam(cplx(0.0, -q));
  }

  cplx value() const { return value_; }
  cplx root() const { return root_; }
  cplx inv_root() const { return inv_root_; }
  bool on_imaginary_axis() const { return value_.real() == 0.0; }

 private:
  cplx value_, root_, inv_root_;
};

/// |Im(lambda^{-1/2})| = sqrt((|lambda| - Re lambda) / (2 |lambda|^2)).
inline double im_inv_root(const LambdaParam& lambda) { return std::abs(lambda.inv_root().imag()); }

/// (2 q0)^{-1/2}, the half-width of Gamma_q0 in Im(lambda^{-1/2}).
inline double gamma_bound(double q0) {
  if (!(q0 > 0.0)) throw Error(ErrorKind::InvalidParameter, "q0 must be positive");
  return 1.0 / std::sqrt(2.0 * q0);
}

/// lambda in Gamma_q0: |Im(lambda^{-1/2})| < (2 q0)^{-1/2}.
inline bool in_gamma(const LambdaParam& lambda, double q0) { return im_inv_root(lambda) < gamma_bound(q0); }

/// Closure of Gamma_q0 (with a relative slack of 1e-14).
inline bool in_gamma_closure(const LambdaParam& lambda, double q0) {
  return im_inv_root(lambda) <= gamma_bound(q0) * (1.0 + 1e-14);
}

/// sec Arg(lambda) = |lambda| / Re(lambda), for Re(lambda) > 0.
inline double sec_arg(const LambdaParam& lambda) {
  if (!(lambda.value().real() > 0.0))
    throw Error(ErrorKind::ArgOutOfRange, "sec Arg(lambda) needs Re(lambda) > 0");
  return std::abs(lambda.value()) / lambda.value().real();
}

/// Fixed data of a kernel evaluation: the direction h and its pairings.
struct KernelContext {
  CambElement h;
  double h_norm_sq = 0.0;
  double h_dot_a = 0.0;  // (h, a)_{C'}
  double a_norm = 0.0;   // ||a||_{C'}

  static KernelContext make(const CambElement& h) {
    if (!(h.norm_sq() > 0.0)) throw Error(ErrorKind::ZeroDirection, "h must be nonzero in C'");
    return {h, h.norm_sq(), pair_with_a(h), drift_norm(h.scale_ptr())};
  }
  const ScalePair& scale() const { return h.scale(); }
};

/// What the kernels need to know about w: ||w||^2, (h,w), beta_w and
/// (e2(w), a). Scaling w by s scales these consistently.
struct WeightGeometry {
  double norm_sq = 0.0;
  double h_dot = 0.0;
  double beta = 0.0;
  double e2_dot_a = 0.0;

  WeightGeometry scaled(double s) const {
    return {s * s * norm_sq, s * h_dot, std::abs(s) * beta, (s < 0.0 ? -1.0 : 1.0) * e2_dot_a};
  }
  double norm() const { return std::sqrt(norm_sq); }
};

inline WeightGeometry weight_geometry(const KernelContext& ctx, const CambElement& w) {
  const GramSchmidtPair gs = gram_schmidt_pair(ctx.h, w);
  return {w.norm_sq(), inner(ctx.h, w), gs.beta_w, gs.e2 ? pair_with_a(*gs.e2) : 0.0};
}

/// exp(z) that reports overflow instead of saturating to inf.
inline cplx exp_checked(cplx z) {
  if (z.real() > 709.0)
    throw Error(ErrorKind::Overflow, "kernel exponent " + std::to_string(z.real()) + " overflows double");
  return std::exp(z);
}

inline cplx kernel_M(const LambdaParam& lambda, const KernelContext& ctx) {
  return principal_sqrt(lambda.value() / (2.0 * std::numbers::pi * ctx.h_norm_sq));
}

/// M(|lambda|; h), the real factor appearing in the norm bounds.
inline double kernel_M_abs(double abs_lambda, const KernelContext& ctx) {
  return std::sqrt(abs_lambda / (2.0 * std::numbers::pi * ctx.h_norm_sq));
}

inline cplx log_V(const LambdaParam& lambda, double xi, double v, const WeightGeometry& w, const KernelContext& ctx) {
  const cplx lam = lambda.value();
  const cplx t = cplx(0.0, 1.0) * lam * (v - xi) + w.h_dot;
  return (t * t - ctx.h_norm_sq * w.norm_sq) / (2.0 * lam * ctx.h_norm_sq);
}

inline cplx log_L(const LambdaParam& lambda, double xi, double v, const KernelContext& ctx) {
  return lambda.value() * (v - xi) * (v - xi) / (2.0 * ctx.h_norm_sq);
}

inline cplx log_H(const LambdaParam& lambda, double xi, double v, const KernelContext& ctx) {
  const cplx t = lambda.root() * (v - xi) - ctx.h_dot_a;
  return -t * t / (2.0 * ctx.h_norm_sq);
}

/// H's exponent with real and imaginary parts of lambda and sqrt(lambda)
/// written out separately.
inline cplx log_H_expanded(const LambdaParam& lambda, double xi, double v, const KernelContext& ctx) {
  const cplx lam = lambda.value(), r = lambda.root();
  const double d = v - xi, n2 = ctx.h_norm_sq, ha = ctx.h_dot_a;
  return -cplx(lam.real(), lam.imag()) * d * d / (2.0 * n2) + cplx(r.real(), r.imag()) * d * ha / n2 -
         ha * ha / (2.0 * n2);
}

inline cplx log_A(const LambdaParam& lambda, const WeightGeometry& w) {
  if (w.beta == 0.0) return {0.0, 0.0};
  return cplx(0.0, 1.0) * lambda.inv_root() * w.beta * w.e2_dot_a;
}

/// log V + log L simplified: i (v-xi)(h,w)/||h||^2 - beta_w^2 / (2 lambda).
inline cplx log_VL(const LambdaParam& lambda, double xi, double v, const WeightGeometry& w, const KernelContext& ctx) {
  const double beta_sq = w.norm_sq - w.h_dot * w.h_dot / ctx.h_norm_sq;
  return cplx(0.0, (v - xi) * w.h_dot / ctx.h_norm_sq) - beta_sq / (2.0 * lambda.value());
}

inline cplx kernel_V(const LambdaParam& lambda, double xi, double v, const WeightGeometry& w,
                     const KernelContext& ctx) {
  return exp_checked(log_V(lambda, xi, v, w, ctx));
}
inline cplx kernel_V(const LambdaParam& lambda, double xi, double v, const CambElement& w, const KernelContext& ctx) {
  return kernel_V(lambda, xi, v, weight_geometry(ctx, w), ctx);
}
inline cplx kernel_L(const LambdaParam& lambda, double xi, double v, const KernelContext& ctx) {
  return exp_checked(log_L(lambda, xi, v, ctx));
}
inline cplx kernel_H(const LambdaParam& lambda, double xi, double v, const KernelContext& ctx) {
  return exp_checked(log_H(lambda, xi, v, ctx));
}
inline cplx kernel_A(const LambdaParam& lambda, const WeightGeometry& w) { return exp_checked(log_A(lambda, w)); }
inline cplx kernel_A(const LambdaParam& lambda, const CambElement& w, const KernelContext& ctx) {
  return kernel_A(lambda, weight_geometry(ctx, w));
}

/// S(lambda; h) = exp{(sec Arg(lambda) + 1) (h,a)^2 / (4 ||h||^2)}, lambda in C_+.
inline double kernel_S(const LambdaParam& lambda, const KernelContext& ctx) {
  const double e = (sec_arg(lambda) + 1.0) * ctx.h_dot_a * ctx.h_dot_a / (4.0 * ctx.h_norm_sq);
  if (e > 709.0) throw Error(ErrorKind::Overflow, "S(lambda;h) overflows double");
  return std::exp(e);
}

/// k(q0; w) = exp{(2 q0)^{-1/2} ||w|| ||a||}.
inline double kernel_k(double q0, double w_norm, double a_norm) {
  return std::exp(gamma_bound(q0) * w_norm * a_norm);
}

inline double kernel_k(double q0, const CambElement& w) {
  return kernel_k(q0, w.norm(), drift_norm(w.scale_ptr()));
}

}  // namespace cabfeyn
