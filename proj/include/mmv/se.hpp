#pragma once

#include <vector>

#include "mmv/model.hpp"

namespace mmv {

struct SeOptions {
  double tol = 1e-10;   // stop when |E_next - E| < tol * E
  int max_iter = 10000;
};

// Scalar MSE recursion E <- mmse_scalar(prior, (E + delta) / R) started
// from E0. The recursion's fixed points coincide with the stationary
// points of the free energy curve.
struct SeTrace {
  std::vector<double> E_sequence;  // E0 followed by each iterate
  bool converged = false;
  double fixed_point = 0.0;        // terminal E
};

SeTrace se_fixed_point(const ProblemParams& params, double E0, const SeOptions& opts = {});

// Fixed point reached from the uninformative start E0 = rho: the MSE an
// iterative message-passing solver is predicted to attain.
double bp_predicted_mse(const ProblemParams& params);

}  // namespace mmv
