#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>

#include "mmv/common.hpp"

namespace mmv {

struct QuadratureOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-14;
  int max_panels = 4000;    // refinement budget; exceeding it reports failure
  int initial_panels = 12;  // 12 x 15 Kronrod nodes from the start
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // conservative: sum over panels of |K15 - G7|
  int panels = 0;
  bool converged = false;
};

// Globally adaptive Gauss-Kronrod (G7, K15) integration of f over [a, b].
// `breakpoints` are optional interior abscissae where the integrand is known
// to change character; they seed the initial subdivision.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts = {},
                                    std::span<const double> breakpoints = {});

// E[g(||h||^2)] for h ~ N(0, I_J), reduced to a 1-D integral in the radius:
// ||h||^2 is chi-square(J), and substituting x = r^2 turns the weight into
// the chi density r^{J-1} e^{-r^2/2} (normalized), which unlike the
// chi-square density stays bounded at the origin for J = 1. The integral is
// truncated at r = sqrt(200 + 20 J), far past any mass that matters at the
// accuracies used here. `x_hints` are optional squared-radius breakpoints
// (e.g. where a log-sum-exp integrand switches branch).
// Throws NumericalError if adaptive refinement fails to converge.
double radial_gaussian_expectation(const std::function<double(double)>& g, int J,
                                   const QuadratureOptions& opts = {},
                                   std::span<const double> x_hints = {});

// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

}  // namespace mmv
