#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"

using namespace cabfeyn;
using testing_support::rel;

namespace {

const double spot = 1.0 / (2.0 * std::sqrt(std::numbers::pi));

PsiFn zero_psi() {
  PsiFn p = gaussian_psi();
  p.psi = [](double) { return cplx(0.0, 0.0); };
  p.label = "zero";
  return p;
}

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidParameter;  // sentinel, callers never expect it
}

}  // namespace

TEST(KernelRoute, SpotValue) {
  const auto sp = wiener_preset();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const double xi = 0.0;
  const auto r = k_lambda(gallery("one", sp), ctx, standard_gaussian_psi(), LambdaParam(1.0), {&xi, 1}, 0.5);
  EXPECT_LT(std::abs(r.values[0] - spot), 1e-8);
  EXPECT_EQ(r.meta.route, Route::Kernel);
  EXPECT_TRUE(r.mc_stderr.empty());
}

TEST(MonteCarloRoute, SpotValue) {
  const auto sp = wiener_preset();
  const auto h = direction_preset(sp, "b");
  const double xi = 0.0;
  const auto r = i_lambda_mc(gallery("one", sp), h, standard_gaussian_psi(), 1.0, {&xi, 1}, 40000, 11, 16);
  EXPECT_LT(std::abs(r.values[0] - spot), 4.0 * r.mc_stderr[0]);
  EXPECT_GT(r.mc_stderr[0], 0.0);
}

TEST(MonteCarloRoute, ZeroPsiGivesZero) {
  const auto sp = testing_support::desk();
  const auto h = direction_preset(sp, "b");
  const auto xs = linspace(-1, 1, 3);
  const auto r = i_lambda_mc(gallery("F4", sp), h, zero_psi(), 2.0, xs, 100, 1, 32);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    EXPECT_EQ(r.values[j], cplx(0.0, 0.0));
    EXPECT_EQ(r.mc_stderr[j], 0.0);
  }
}

TEST(MonteCarloRoute, Deterministic) {
  const auto sp = testing_support::desk();
  const auto h = direction_preset(sp, "b");
  const auto xs = linspace(-1, 1, 3);
  const auto F = gallery("F3", sp);
  const auto a = i_lambda_mc(F, h, gaussian_psi(0.2, 0.8), 1.0, xs, 500, 99, 64);
  const auto b = i_lambda_mc(F, h, gaussian_psi(0.2, 0.8), 1.0, xs, 500, 99, 64);
  const auto c = i_lambda_mc(F, h, gaussian_psi(0.2, 0.8), 1.0, xs, 500, 100, 64);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.mc_stderr, b.mc_stderr);
  EXPECT_NE(a.values, c.values);
}

TEST(MonteCarloRoute, AgreesWithKernelAcrossGallery) {
  const auto sp = testing_support::desk();
  const auto xs = linspace(-1.5, 1.5, 3);
  const PsiFn psi = gaussian_psi(0.0, 1.0);
  GalleryParams gp;
  gp.w0 = direction_preset(sp, "monomial:1");
  gp.m = 0.5;
  gp.sigma2 = 1.0;
  for (const char* name : {"one", "F2", "F3", "F4"}) {
    const auto F = gallery(name, sp, gp);
    for (const char* hn : {"b", "s_star_b_unit"}) {
      const auto h = direction_preset(sp, hn);
      const auto mc = i_lambda_mc(F, h, psi, 2.0, xs, 20000, 5, 256);
      const auto k = k_lambda(F, KernelContext::make(h), psi, LambdaParam(2.0), xs, 0.5);
      for (std::size_t j = 0; j < xs.size(); ++j)
        EXPECT_LT(std::abs(mc.values[j] - k.values[j]), 4.0 * mc.mc_stderr[j]) << name << " " << hn << " " << xs[j];
    }
  }
}

TEST(KernelRoute, WienerReductionMatchesGaussianOracle) {
  const auto sp = wiener_preset();
  const auto xs = linspace(-2, 2, 5);
  const double m = 0.3, sigma = 0.9, amp = 1.2;
  const PsiFn psi = gaussian_psi(m, sigma, amp);
  for (const char* hn : {"b", "s_star_b_unit", "monomial:2"}) {
    const auto h = direction_preset(sp, hn);
    const auto ctx = KernelContext::make(h);
    const double n2 = h.norm_sq();
    const auto w = direction_preset(sp, "s_star_b");
    const double c0 = inner(h, w), b0 = w.norm_sq() - c0 * c0 / n2;
    for (double lam : {1.0, 2.0}) {
      const cplx s = 1.0 / std::sqrt(lam);
      const auto one = k_lambda(gallery("one", sp), ctx, psi, LambdaParam(lam), xs, 0.5);
      const auto f4 = k_lambda(gallery("F4", sp), ctx, psi, LambdaParam(lam), xs, 0.5);
      const auto f3 = k_lambda(gallery("F3", sp), ctx, psi, LambdaParam(lam), xs, 0.5);
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const double xi = xs[j];
        const cplx o1 = testing_support::wiener_gaussian_oracle(amp, m, sigma, s, 0.0, 0.0, n2, xi);
        const cplx o4 = testing_support::wiener_gaussian_oracle(amp, m, sigma, s, c0, b0, n2, xi);
        const cplx o3 = numint::gaussian_expectation(
            [&](double v) { return testing_support::wiener_gaussian_oracle(amp, m, sigma, s, v * c0, v * v * b0, n2, xi); },
            0.0, std::numbers::sqrt2, 96);
        EXPECT_LT(std::abs(one.values[j] - o1), 1e-8) << hn << " " << lam;
        EXPECT_LT(std::abs(f4.values[j] - o4), 1e-8) << hn << " " << lam;
        EXPECT_LT(std::abs(f3.values[j] - o3), 1e-8) << hn << " " << lam;
      }
    }
  }
}

TEST(KernelRoute, ComplexLambdaWienerOracle) {
  // a = 0 so the oracle continues analytically in s = lambda^{-1/2}.
  const auto sp = wiener_preset();
  const auto h = direction_preset(sp, "b");
  const auto ctx = KernelContext::make(h);
  const auto xs = linspace(-1, 1, 3);
  const PsiFn psi = gaussian_psi(0.0, 1.0);
  for (cplx lam : {cplx(1.0, -0.5), cplx(0.3, 2.0), cplx(0.0, -1.0)}) {
    const LambdaParam lp(lam);
    const auto r = k_lambda(gallery("one", sp), ctx, psi, lp, xs, 0.5);
    for (std::size_t j = 0; j < xs.size(); ++j)
      EXPECT_LT(std::abs(r.values[j] - testing_support::wiener_gaussian_oracle(1.0, 0.0, 1.0, lp.inv_root(), 0.0, 0.0,
                                                                               1.0, xs[j])),
                1e-8)
          << lam;
  }
}

TEST(KernelRoute, BoundaryValueIsKernelAtFeynmanParameter) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const auto xs = linspace(-1, 1, 3);
  const PsiFn psi = gaussian_psi();
  const auto F = gallery("F4", sp);
  KernelOptions opt;
  opt.delta = 1.0;
  const auto j = j_q(F, ctx, psi, 1.0, xs, 0.5, 1.0);
  const auto k = k_lambda(F, ctx, psi, LambdaParam::feynman(1.0), xs, 0.5, opt);
  EXPECT_EQ(j.values, k.values);
  const auto f3 = j_q(gallery("F3", sp), ctx, psi, 1.0, xs, 0.5, 1.0);
  for (const auto& v : f3.values) EXPECT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag()));
}

TEST(KernelRoute, FeynmanBoundHoldsForConstantFunctional) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b_unit"));
  const auto xs = linspace(-3, 3, 13);
  const PsiFn psi = gaussian_psi(0.1, 0.7);
  for (double q : {1.0, -2.0}) {
    const auto j = j_q(gallery("one", sp), ctx, psi, q, xs, 0.5, 1.0);
    const double bound = op_norm_bound(gallery("one", sp), ctx, LambdaParam::feynman(q), 0.5) *
                         nu_delta_norm(psi, 1.0, sp->var_a()).value;
    for (const auto& v : j.values) EXPECT_LE(std::abs(v), bound);
  }
}

TEST(KernelRoute, LipschitzInLambda) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const double xi = 0.4;
  const auto F = gallery("F4", sp);
  const PsiFn psi = gaussian_psi();
  const cplx lam0(1.0, -0.5);
  auto K = [&](cplx l) { return k_lambda(F, ctx, psi, LambdaParam(l), {&xi, 1}, 0.5).values[0]; };
  const cplx k0 = K(lam0);
  const double d1 = std::abs(K(lam0 + 1e-3) - k0), d2 = std::abs(K(lam0 + 5e-4) - k0);
  EXPECT_GT(d1, 0.0);
  EXPECT_NEAR(d1 / d2, 2.0, 0.05);
  EXPECT_LT(d1, 1e-2);
}

TEST(KernelRoute, ContourIntegralVanishes) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const double xi = -0.3;
  const auto F = gallery("F3", sp);
  const PsiFn psi = gaussian_psi(0.0, 1.0, 1.0, 0.5);
  auto K = [&](cplx l) { return k_lambda(F, ctx, psi, LambdaParam(l), {&xi, 1}, 0.5).values[0]; };
  const cplx c(1.0, -0.5);
  const double half = 0.1;
  const std::array<cplx, 5> corner{c + cplx(-half, -half), c + cplx(half, -half), c + cplx(half, half),
                                   c + cplx(-half, half), c + cplx(-half, -half)};
  cplx loop{};
  double kmax = 0.0;
  numint::Options o;
  o.rel_tol = 1e-10;
  for (int side = 0; side < 4; ++side) {
    const cplx a = corner[side], d = corner[side + 1] - corner[side];
    loop += d * numint::integrate(
                    [&](double t) {
                      const cplx k = K(a + t * d);
                      kmax = std::max(kmax, std::abs(k));
                      return k;
                    },
                    0.0, 1.0, o)
                    .value;
  }
  EXPECT_LE(std::abs(loop), 1e-6 * (8 * half) * kmax);
}

TEST(ConvergenceStudy, GapsShrink) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const auto xs = linspace(-1, 1, 3);
  const auto seq = feynman_sequence(1.0, 8);
  const auto st = convergence_study(gallery("one", sp), ctx, gaussian_psi(), 1.0, 0.5, seq, xs, 1.0);
  ASSERT_EQ(st.gaps.size(), 8u);
  for (std::size_t n = 3; n < st.gaps.size(); ++n) EXPECT_LT(st.gaps[n], st.gaps[n - 1]);
  EXPECT_LT(st.gaps.back(), 2e-2);
}

TEST(ConvergenceStudy, ConstantSequenceHasConstantGap) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const auto xs = linspace(-1, 1, 3);
  const std::vector<cplx> seq(3, cplx(0.25, -1.0));
  const auto st = convergence_study(gallery("F4", sp), ctx, gaussian_psi(), 1.0, 0.5, seq, xs, 1.0);
  EXPECT_EQ(st.gaps[0], st.gaps[1]);
  EXPECT_EQ(st.gaps[1], st.gaps[2]);
}

TEST(ConvergenceStudy, RejectsSequencesOutsideRegion) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const double xi = 0.0;
  const auto F = gallery("one", sp);
  EXPECT_EQ(kind_of([&] {
              convergence_study(F, ctx, gaussian_psi(), 0.4, 0.5, feynman_sequence(0.4, 3), {&xi, 1}, 1.0);
            }),
            ErrorKind::SequenceLeavesRegion);
  const std::vector<cplx> bad{cplx(0.01, -0.2)};
  EXPECT_EQ(kind_of([&] { convergence_study(F, ctx, gaussian_psi(), 1.0, 0.5, bad, {&xi, 1}, 1.0); }),
            ErrorKind::SequenceLeavesRegion);
}

TEST(Bounds, WienerUnitDirection) {
  const auto sp = wiener_preset();
  const auto ctx = KernelContext::make(direction_preset(sp, "b_unit"));
  EXPECT_NEAR(op_norm_bound(gallery("one", sp), ctx, LambdaParam(1.0), 0.5), 1.0 / std::sqrt(2 * std::numbers::pi),
              1e-15);
}

TEST(Bounds, NormInequalityRandomPsi) {
  const auto sp = testing_support::desk();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0), sd(0.3, 2.0);
  const auto xs = linspace(-4, 4, 17);
  const auto F = gallery("F3", sp);
  for (int i = 0; i < 6; ++i) {
    const auto ctx = KernelContext::make(testing_support::random_element(sp, rng));
    const PsiFn psi = gaussian_psi(u(rng), sd(rng), 1.0 + u(rng) * 0.5, u(rng));
    const LambdaParam lam(cplx(1.0 + u(rng) * 0.5, u(rng)));
    const auto r = k_lambda(F, ctx, psi, lam, xs, 0.5);
    const double bound = op_norm_bound(F, ctx, lam, 0.5) * l1_norm(psi);
    for (const auto& v : r.values) EXPECT_LE(std::abs(v), bound);
  }
}

TEST(Counterexample, PartialIntegralsDiverge) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "a_unit"));
  const std::vector<double> radii{0.0, 5, 10, 20, 40};
  const auto rep = counterexample_study(ctx, radii);
  EXPECT_EQ(rep.rows[0].partial, 0.0);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    EXPECT_LT(rel(rep.rows[i].partial, rep.rows[i].closed_form), 1e-8);
    EXPECT_GT(rep.rows[i].partial, rep.rows[i - 1].partial);
  }
  EXPECT_GT(rep.rows[4].partial / rep.rows[3].partial, 2.0);
  EXPECT_LT(rel(rep.psi_l1, rep.psi_l1_closed), 1e-8);
  EXPECT_LT(rel(rep.psi_sup, rep.psi_sup_closed), 1e-8);
}

TEST(Counterexample, NeedsDriftAndUnitDirection) {
  const auto w = wiener_preset();
  const auto ctx_w = KernelContext::make(direction_preset(w, "b"));
  const std::vector<double> radii{5.0};
  EXPECT_EQ(kind_of([&] { counterexample_study(ctx_w, radii); }), ErrorKind::BadConfig);
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(2.0 * direction_preset(sp, "a_unit"));
  EXPECT_EQ(kind_of([&] { counterexample_study(ctx, radii); }), ErrorKind::BadConfig);
}

TEST(Norms, NuDelta) {
  EXPECT_NEAR(nu_delta_norm(standard_gaussian_psi(), 1.0, 0.0).value, 1.0, 1e-11);
  EXPECT_NEAR(nu_delta_norm(gaussian_psi(), 0.5, 0.5).value, 2.0 * std::sqrt(std::numbers::pi), 1e-10);
  EXPECT_TRUE(nu_delta_norm(counterexample_psi(1.0), 1.0, 0.1).divergent);
  EXPECT_TRUE(nu_delta_norm(gaussian_psi(), 1.0, 0.5).divergent);
  EXPECT_EQ(kind_of([] { nu_delta_norm(gaussian_psi(), 0.0, 0.1); }), ErrorKind::InvalidParameter);
  EXPECT_GT(nu_delta_norm(bump_psi(), 3.0, 2.0).value, l1_norm(bump_psi()));
  EXPECT_NEAR(sup_norm(gaussian_psi(1.0, 0.5, 3.0)), 3.0, 1e-12);
}

TEST(Norms, GaussianIdentity) {
  EXPECT_NEAR(std::abs(gaussian_identity_check(1.0, 0.0).numeric - std::sqrt(std::numbers::pi)), 0.0, 1e-13);
  for (auto [a, b] : {std::pair<cplx, cplx>{1e-3, 0.0}, {cplx(1e-3, 1.0), cplx(0.02, 0.5)}, {cplx(10, -2), cplx(3, 1)},
                      {cplx(0.5, 2.0), cplx(0.0, -1.0)}})
    EXPECT_LT(gaussian_identity_check(a, b).rel_error(), 1e-10) << a << " " << b;
  EXPECT_EQ(kind_of([] { gaussian_identity_check(cplx(0.0, 1.0), 0.0); }), ErrorKind::InvalidParameter);
}

TEST(Psi, EnvelopesDominate) {
  for (const PsiFn& p : {gaussian_psi(0.3, 0.5, 2.0, 4.0), standard_gaussian_psi(), bump_psi(1.0, 2.0),
                         counterexample_psi(0.7), counterexample_psi(2.0)})
    EXPECT_TRUE(p.envelope_dominates()) << p.label;
  EXPECT_EQ(kind_of([] { counterexample_psi(0.0); }), ErrorKind::BadConfig);
}

TEST(Errors, AdmissibilityKinds) {
  const auto sp = testing_support::desk();
  const auto ctx = KernelContext::make(direction_preset(sp, "b"));
  const double xi = 0.0;
  const PsiFn psi = gaussian_psi();
  EXPECT_EQ(kind_of([&] { k_lambda(gallery("one", sp), ctx, psi, LambdaParam(cplx(0.01, -0.2)), {&xi, 1}, 0.5); }),
            ErrorKind::NotAdmissible);
  EXPECT_EQ(kind_of([&] { j_q(gallery("one", sp), ctx, psi, 0.25, {&xi, 1}, 0.5, 1.0); }), ErrorKind::NotAdmissible);
  EXPECT_EQ(kind_of([&] { j_q(gallery("one", sp), ctx, psi, 1.0, {&xi, 1}, 0.5, std::nullopt); }),
            ErrorKind::PsiNotIntegrable);
  EXPECT_EQ(kind_of([&] { j_q(gallery("one", sp), ctx, counterexample_psi(1.0), 1.0, {&xi, 1}, 0.5, 1.0); }),
            ErrorKind::PsiNotIntegrable);
  GalleryParams gp;
  gp.w0 = direction_preset(sp, "monomial:1");
  gp.eta = DensityEta{[](double v) { return cplx(0.25 * std::exp(-0.5 * std::abs(v))); }, 60.0};
  EXPECT_EQ(kind_of([&] { k_lambda(gallery("F1", sp, gp), ctx, psi, LambdaParam(1.0), {&xi, 1}, 1e-3); }),
            ErrorKind::NotInFq0);
  EXPECT_EQ(kind_of([&] { i_lambda_mc(gallery("one", sp), ctx.h, psi, -1.0, {&xi, 1}, 10, 1, 8); }),
            ErrorKind::NonPositiveLambda);
  EXPECT_EQ(kind_of([&] { k_lambda(gallery("one", wiener_preset()), ctx, psi, LambdaParam(1.0), {&xi, 1}, 0.5); }),
            ErrorKind::MismatchedScalePair);
}
