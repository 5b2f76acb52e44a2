#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmv/sim.hpp"

namespace mmv {

// Starting value for the per-entry variance state v.
//   as_printed    : v = rho * delta
//   prior_variance: v = rho (the per-entry variance of the prior)
// The rho*delta start makes the first effective-noise estimate optimistic
// by a factor ~delta, producing a large early-iteration transient before
// the iteration self-corrects; the prior-variance start makes the first
// iteration agree exactly with the scalar MSE recursion. The default is
// as_printed; analyses that compare per-iteration traces against the
// recursion should opt into prior_variance.
enum class VarianceInit { as_printed, prior_variance };

struct AmpConfig {
  int t_max = 200;
  double epsilon = 1e-8;  // stop when the mean-squared estimate change dips below
  double damping = 0.0;   // in [0,1): new state = (1-damping)*update + damping*old
  VarianceInit v_init = VarianceInit::as_printed;
};

struct AmpResult {
  Eigen::MatrixXd estimates;        // N x J posterior-mean estimates a
  Eigen::MatrixXd variances;        // N x J posterior variances v
  std::vector<double> mse_trace;    // per-iteration MSE against the true signal
  std::vector<double> delta_trace;  // per-iteration mean-squared estimate change
  int iterations = 0;               // loop bodies executed (= trace lengths)
  bool converged = false;           // stopped because delta <= epsilon
  bool diverged = false;            // a state value became non-finite

  double final_mse() const { return mse_trace.empty() ? 0.0 : mse_trace.back(); }
};

// Iterative posterior-mean solver for the synthesized channels:
// per-channel Onsager-corrected residual updates lift the matrix channel to
// J parallel scalar channels (effective noise Sigma_j = N(delta+Theta_j)/M),
// then each row is re-estimated by the joint spike-and-slab denoiser.
// Rejects complex_complex ensembles and priors that do not match the
// ensemble's generating prior.
AmpResult amp_run(const MeasurementEnsemble& ensemble, const PriorParams& prior,
                  const AmpConfig& config);

struct SweepTrial {
  int trial = 0;
  int iterations = 0;
  double mse = 0.0;
  bool converged = false;
  bool diverged = false;
  std::vector<double> mse_trace;
  std::string error;  // nonempty if this trial raised instead of finishing
};

struct SweepCell {
  double delta_db = 0.0;
  double delta = 0.0;
  double R = 0.0;
  std::vector<SweepTrial> trials;
  double median_mse = 0.0;
  double se_mse = 0.0;    // scalar-recursion predicted MSE for this cell
  double ratio_ln = 0.0;  // ln(median_mse / se_mse)
  std::string error;      // nonempty if the whole cell failed
};

struct AmpSweep {
  Setting setting = Setting::mmv1;
  PriorParams prior;
  Eigen::Index N = 0;
  int n_trials = 0;
  std::uint64_t seed = 0;
  AmpConfig config;
  std::vector<double> delta_grid_db;
  std::vector<double> R_grid;
  std::vector<SweepCell> cells;  // row-major: delta outer, R inner
};

// Runs n_trials independent ensembles per (delta, R) cell with per-trial
// derived seeds and reports median MSE against the predicted fixed point.
// Trial divergences are recorded in the trial; cell-level failures are
// recorded in the cell; the sweep itself always completes.
AmpSweep amp_sweep(Setting setting, const PriorParams& prior,
                   const std::vector<double>& delta_grid_db, const std::vector<double>& R_grid,
                   Eigen::Index N, int n_trials, const AmpConfig& config, std::uint64_t seed,
                   int jobs = 0);

}  // namespace mmv
