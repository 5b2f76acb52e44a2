#include "mmv/amp.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mmv/parallel.hpp"
#include "mmv/rng.hpp"
#include "mmv/se.hpp"

namespace mmv {

AmpResult amp_run(const MeasurementEnsemble& ens, const PriorParams& prior,
                  const AmpConfig& config) {
  prior.validate();
  if (ens.setting == Setting::complex_complex)
    throw std::invalid_argument("amp_run: complex_complex ensembles are not supported");
  if (prior.rho != ens.params.prior.rho || prior.J != ens.params.prior.J)
    throw std::invalid_argument("amp_run: prior must match the ensemble's generating prior");
  if (config.t_max < 1) throw std::invalid_argument("amp_run: t_max must be >= 1");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("amp_run: epsilon must be positive");
  if (!(config.damping >= 0.0 && config.damping < 1.0))
    throw std::invalid_argument("amp_run: damping must lie in [0, 1)");

  const Eigen::Index N = ens.N, M = ens.M;
  const int J = prior.J;
  const double delta = ens.params.delta;
  const double nj = static_cast<double>(N) * J;

  const Eigen::MatrixXd& y = ens.measurements;
  Eigen::MatrixXd w = y;                                // residual-corrected measurements
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(J);     // per-channel variance means
  const double v0 = config.v_init == VarianceInit::as_printed ? prior.rho * delta : prior.rho;
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(N, J, v0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, J);
  Eigen::MatrixXd q(M, J), pseudodata(N, J);
  Eigen::VectorXd sigma(J);
  Eigen::MatrixXd a_new, v_new;

  AmpResult result;
  result.mse_trace.reserve(config.t_max);
  result.delta_trace.reserve(config.t_max);

  int t = 1;
  double change = std::numeric_limits<double>::infinity();
  while (t < config.t_max && change > config.epsilon) {
    for (int j = 0; j < J; ++j) {
      q.col(j) = (y.col(j) - w.col(j)) / (delta + theta[j]);
      theta[j] = v.col(j).mean();
      w.col(j) = (*ens.matrices[j]) * a.col(j) - theta[j] * q.col(j);
      sigma[j] = static_cast<double>(N) * (delta + theta[j]) / static_cast<double>(M);
      pseudodata.col(j) =
          a.col(j) + sigma[j] * (ens.matrices[j]->transpose() * (y.col(j) - w.col(j))) /
                         (delta + theta[j]);
      assert(std::abs(theta[j] - v.col(j).mean()) <= 1e-12 * (1.0 + std::abs(theta[j])));
    }
    const Eigen::MatrixXd a_hat = a;  // previous estimate, for the stopping rule
    denoise_rows(prior, sigma, pseudodata, a_new, v_new);
    if (config.damping > 0.0) {
      a = (1.0 - config.damping) * a_new + config.damping * a;
      v = (1.0 - config.damping) * v_new + config.damping * v;
    } else {
      a = a_new;
      v = v_new;
    }
    ++t;
    change = (a_hat - a).squaredNorm() / nj;
    result.delta_trace.push_back(change);
    result.mse_trace.push_back((a - ens.signal).squaredNorm() / nj);
    ++result.iterations;
    if (!std::isfinite(change) || !theta.allFinite()) {
      result.diverged = true;
      break;
    }
  }
  result.converged = !result.diverged && change <= config.epsilon;
  result.estimates = std::move(a);
  result.variances = std::move(v);
  return result;
}

AmpSweep amp_sweep(Setting setting, const PriorParams& prior,
                   const std::vector<double>& delta_grid_db, const std::vector<double>& R_grid,
                   Eigen::Index N, int n_trials, const AmpConfig& config, std::uint64_t seed,
                   int jobs) {
  prior.validate();
  if (n_trials < 1) throw std::invalid_argument("amp_sweep: n_trials must be >= 1");
  if (delta_grid_db.empty() || R_grid.empty())
    throw std::invalid_argument("amp_sweep: grids must be nonempty");

  AmpSweep sweep;
  sweep.setting = setting;
  sweep.prior = prior;
  sweep.N = N;
  sweep.n_trials = n_trials;
  sweep.seed = seed;
  sweep.config = config;
  sweep.delta_grid_db = delta_grid_db;
  sweep.R_grid = R_grid;
  sweep.cells.resize(delta_grid_db.size() * R_grid.size());

  // Parallel over (cell, trial) pairs; aggregation afterwards is serial and
  // deterministic regardless of scheduling.
  for (std::size_t ci = 0; ci < sweep.cells.size(); ++ci) {
    SweepCell& cell = sweep.cells[ci];
    cell.delta_db = delta_grid_db[ci / R_grid.size()];
    cell.delta = from_db(cell.delta_db);
    cell.R = R_grid[ci % R_grid.size()];
    cell.trials.resize(n_trials);
  }
  struct Job {
    std::size_t cell;
    int trial;
  };
  std::vector<Job> job_list;
  job_list.reserve(sweep.cells.size() * static_cast<std::size_t>(n_trials));
  for (std::size_t ci = 0; ci < sweep.cells.size(); ++ci)
    for (int k = 0; k < n_trials; ++k) job_list.push_back({ci, k});

  parallel_for(job_list.size(), jobs, [&](std::size_t idx) {
    const auto [ci, k] = job_list[idx];
    SweepCell& cell = sweep.cells[ci];
    SweepTrial& trial = cell.trials[k];
    trial.trial = k;
    try {
      const MeasurementEnsemble ens =
          generate(setting, prior, cell.delta, cell.R, N,
                   derive_seed(seed, {static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(k)}));
      const AmpResult r = amp_run(ens, prior, config);
      trial.iterations = r.iterations;
      trial.mse = r.final_mse();
      trial.converged = r.converged;
      trial.diverged = r.diverged;
      trial.mse_trace = r.mse_trace;
    } catch (const std::exception& e) {
      trial.diverged = true;
      trial.mse = std::numeric_limits<double>::quiet_NaN();
      trial.error = e.what();
    }
  });

  for (SweepCell& cell : sweep.cells) {
    std::vector<double> mses;
    for (const SweepTrial& trial : cell.trials) {
      if (std::isfinite(trial.mse)) mses.push_back(trial.mse);
      if (cell.error.empty() && !trial.error.empty()) cell.error = trial.error;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.median_mse = mses.empty() ? nan : median(mses);
    try {
      cell.se_mse = bp_predicted_mse(ProblemParams{prior, cell.delta, cell.R});
    } catch (const std::exception& e) {
      cell.se_mse = nan;
      if (cell.error.empty()) cell.error = e.what();
    }
    cell.ratio_ln = std::log(cell.median_mse / cell.se_mse);
  }
  return sweep;
}

}  // namespace mmv
