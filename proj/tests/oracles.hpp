#pragma once

// Test-only numeric oracles. Everything here is independent of the library
// code paths it is used to check.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

// Adaptive Simpson quadrature with absolute tolerance.
inline double adaptive_simpson_impl(const std::function<double(double)>& f, double a, double b,
                                    double fa, double fm, double fb, double whole, double tol,
                                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson_impl(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_impl(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_depth = 40) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_impl(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Mixture density f_{U|x1} written out directly; valid wherever the
// exponentials stay normal (|u| <= 20 is plenty for every test grid).
inline double mixture_pdf(double x, int x1) {
  constexpr double inv_sqrt_pi = 0.5641895835477562869480794515607726;
  const double m = 2.0 * x1;
  return 0.5 * inv_sqrt_pi * (std::exp(-(x - m) * (x - m)) + std::exp(-x * x));
}

// Bayes-rule posterior P_{X1|U}(+1|u) from the mixture densities.
inline double bayes_posterior_plus(double u) {
  const double fp = mixture_pdf(u, +1);
  const double fm = mixture_pdf(u, -1);
  if (fp + fm <= 0.0) throw std::runtime_error("bayes oracle: densities underflowed");
  return fp / (fp + fm);
}

inline double bayes_posterior(int x1, double u) {
  return x1 > 0 ? bayes_posterior_plus(u) : 1.0 - bayes_posterior_plus(u);
}

}  // namespace oracles
