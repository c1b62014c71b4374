#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "cabfeyn/cabfeyn.hpp"

namespace testing_support {

using cabfeyn::cplx;

// a(t) = t, b(t) = t.
inline cabfeyn::ScalePairPtr unit_drift(int grid_n = 1024) {
  return cabfeyn::make_valid_scale_pair(
      1.0, [](double t) { return t; }, [](double) { return 1.0; }, [](double t) { return t; },
      [](double) { return 1.0; }, grid_n, "unit_drift");
}

// a = 0, b(t) = t^2 + t (b' > 0 on [0,1]).
inline cabfeyn::ScalePairPtr quadratic_b(int grid_n = 1024) {
  return cabfeyn::make_valid_scale_pair(
      1.0, [](double) { return 0.0; }, [](double) { return 0.0; }, [](double t) { return t * t + t; },
      [](double t) { return 2.0 * t + 1.0; }, grid_n, "quadratic_b");
}

inline cabfeyn::ScalePairPtr desk() { return cabfeyn::drifted_preset(0.3, 0.5); }

// z(t) = c0 + c1 t + c2 cos(3t).
inline cabfeyn::CambElement random_element(const cabfeyn::ScalePairPtr& sp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double c0 = u(rng), c1 = u(rng), c2 = u(rng);
  return cabfeyn::CambElement(sp, [=](double t) { return c0 + c1 * t + c2 * std::cos(3.0 * t); }, "random");
}

// E[exp{i s (w,x)~} psi(s (h,x)~ + xi)] under Wiener-type measure (a = 0) for
// psi(v) = amp exp(-(v - m)^2 / (2 sigma^2)); c = (h,w), beta2 = ||w||^2 - c^2/||h||^2,
// n2 = ||h||^2. Direct Gaussian integral in the single variable X = (h,x)~.
inline cplx wiener_gaussian_oracle(double amp, double m, double sigma, cplx s, double c, double beta2, double n2,
                                   double xi) {
  const double pi = 3.14159265358979323846;
  const cplx i(0.0, 1.0);
  const cplx alpha = 1.0 / (2.0 * n2) + s * s / (2.0 * sigma * sigma);
  const cplx beta = i * s * c / n2 - s * (xi - m) / (sigma * sigma);
  const double gamma = -(xi - m) * (xi - m) / (2.0 * sigma * sigma);
  cplx root = std::sqrt(pi / alpha);
  if (root.real() < 0.0) root = -root;
  return amp * std::exp(-s * s * beta2 / 2.0) / std::sqrt(2.0 * pi * n2) * root *
         std::exp(beta * beta / (4.0 * alpha) + gamma);
}

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing_support
