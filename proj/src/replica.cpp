#include "mmv/replica.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mmv/model.hpp"
#include "mmv/quadrature.hpp"

namespace mmv {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Each local maximum of the free energy sits at an attracting fixed point of
// the scalar-channel self-consistency map E -> mmse_scalar((E + delta) / R).
// Iterating that map from the golden-section estimate sharpens the location
// far below the flat-top resolution limit of direct function comparison.
// Returns the polished E, or the input unchanged if the iteration leaves the
// bracketing interval.
double polish_maximum(const ProblemParams& params, double E, double lo, double hi) {
  double x = E;
  for (int it = 0; it < 200; ++it) {
    const double next = mmse_scalar(params.prior, (x + params.delta) / params.R);
    if (!(next > lo && next < hi)) return x;
    const double move = std::abs(next - x);
    x = next;
    if (move < 1e-13 * std::max(x, 1e-300)) break;
  }
  return x;
}

double golden_refine(const ProblemParams& params, double log_lo, double log_hi) {
  const double invphi = 0.6180339887498948482;  // (sqrt(5) - 1) / 2
  auto f = [&](double x) { return free_energy(params, std::exp(x)); };
  double lo = log_lo, hi = log_hi;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > kRefineRelTol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

double free_energy(const ProblemParams& params, double E) {
  params.validate();
  if (!(E > 0.0) || !std::isfinite(E))
    throw std::invalid_argument("free_energy: E must be positive and finite");
  const double rho = params.prior.rho;
  const int J = params.prior.J;
  const double delta = params.delta;
  const double R = params.R;
  const double a = delta + E;
  if (!(a > 0.0) || a < 1e-300)
    throw std::invalid_argument("free_energy: delta + E underflows");

  const double c = a / (R + a);
  const double T1 = -0.5 * J * R * (std::log(2.0 * kPi * a) + delta / a);
  if (rho == 1.0) return T1 + 0.5 * J * std::log(c);

  const double T2 = J * R * (1.0 - rho) / (2.0 * (R + a));
  const double t1 = R / (2.0 * a);
  const double t2 = R / (2.0 * (R + a));
  const double la = std::log(rho) + 0.5 * J * std::log(c);
  const double lb = std::log1p(-rho);
  // Each expectation integrand is log(rho c^{J/2} + (1-rho) e^{-t x}) with
  // x the squared norm of a standard J-dim Gaussian; the two branches of
  // the log-sum cross at x = (lb - la) / t, which seeds the quadrature.
  auto make_term = [&](double t) {
    auto g = [la, lb, t](double x) { return log_add_exp(la, lb - t * x); };
    double hint[1];
    std::size_t n_hint = 0;
    const double x_star = (lb - la) / t;
    if (x_star > 0.0) hint[n_hint++] = x_star;
    return radial_gaussian_expectation(g, J, {}, {hint, n_hint});
  };
  const double T3 = rho * make_term(t1);
  const double T4 = (1.0 - rho) * make_term(t2);
  return T1 + T2 + T3 + T4;
}

FreeEnergyProfile profile(const ProblemParams& params, double E_min, double E_max, int n_grid) {
  params.validate();
  if (!(E_min > 0.0) || !(E_min < E_max))
    throw std::invalid_argument("profile: require 0 < E_min < E_max");
  if (n_grid < 64) throw std::invalid_argument("profile: n_grid must be >= 64");

  FreeEnergyProfile out;
  out.params = params;
  out.E_grid.resize(n_grid);
  out.F_values.resize(n_grid);
  const double llo = std::log(E_min), lhi = std::log(E_max);
  for (int i = 0; i < n_grid; ++i) {
    const double lx = llo + (lhi - llo) * i / (n_grid - 1);
    out.E_grid[i] = std::exp(lx);
    out.F_values[i] = free_energy(params, out.E_grid[i]);
  }
  for (int i = 1; i + 1 < n_grid; ++i) {
    if (out.F_values[i] > out.F_values[i - 1] && out.F_values[i] > out.F_values[i + 1]) {
      double E_star =
          golden_refine(params, std::log(out.E_grid[i - 1]), std::log(out.E_grid[i + 1]));
      E_star = polish_maximum(params, E_star, out.E_grid[i - 1], out.E_grid[i + 1]);
      out.local_maxima.push_back({E_star, free_energy(params, E_star)});
    }
  }
  std::sort(out.local_maxima.begin(), out.local_maxima.end(),
            [](const LocalMax& u, const LocalMax& v) { return u.E < v.E; });
  out.anomalous = out.local_maxima.empty() || out.local_maxima.size() > 2;
  if (!out.local_maxima.empty()) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(out.local_maxima.size()); ++k) {
      const double dF = out.local_maxima[k].F - out.local_maxima[best].F;
      if (std::abs(dF) < kTieTolerance) {
        out.degenerate = true;  // tie: keep the smaller-E maximum as global
      } else if (dF > 0.0) {
        best = k;
      }
    }
    out.global_max_index = best;
  }
  return out;
}

FreeEnergyProfile default_profile(const ProblemParams& params) {
  params.validate();
  return profile(params, params.delta * 1e-3, 1.05 * params.prior.rho, kDefaultProfileGrid);
}

double mmse(const ProblemParams& params) {
  const FreeEnergyProfile p = default_profile(params);
  if (p.local_maxima.empty())
    throw NumericalError("mmse: free energy profile has no interior maximum");
  return p.global_max().E;
}

}  // namespace mmv
