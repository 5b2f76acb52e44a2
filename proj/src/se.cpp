#include "mmv/se.hpp"

#include <cmath>
#include <stdexcept>

namespace mmv {

SeTrace se_fixed_point(const ProblemParams& params, double E0, const SeOptions& opts) {
  params.validate();
  if (!(E0 > 0.0) || !(E0 <= params.prior.rho))
    throw std::invalid_argument("se_fixed_point: E0 must lie in (0, rho]");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("se_fixed_point: tol must be positive");
  if (opts.max_iter < 1) throw std::invalid_argument("se_fixed_point: max_iter must be >= 1");

  SeTrace trace;
  trace.E_sequence.reserve(64);
  trace.E_sequence.push_back(E0);
  double E = E0;
  for (int it = 0; it < opts.max_iter; ++it) {
    const double E_next = mmse_scalar(params.prior, (E + params.delta) / params.R);
    trace.E_sequence.push_back(E_next);
    const bool done = std::abs(E_next - E) < opts.tol * std::max(E, 1e-300);
    E = E_next;
    if (done) {
      trace.converged = true;
      break;
    }
  }
  trace.fixed_point = E;
  return trace;
}

double bp_predicted_mse(const ProblemParams& params) {
  params.validate();
  return se_fixed_point(params, params.prior.rho).fixed_point;
}

}  // namespace mmv
