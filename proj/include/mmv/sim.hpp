#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmv/model.hpp"

namespace mmv {

// Channel constructions:
//   mmv1           : J measurement matrices, all drawn independently
//   mmv2           : one matrix shared by all J channels
//   complex_real   : complex signal (J=2 interleaved as [real, imag]
//                    super symbols) observed through one real matrix;
//                    generation is bit-identical to mmv2 with J=2
//   complex_complex: complex signal and complex matrix; stored as the two
//                    real matrices [F_real, F_imag] with cross-coupled
//                    measurements, equivalent to a stacked 2M x 2N real
//                    channel (see stacked_matrix)
enum class Setting { mmv1, mmv2, complex_real, complex_complex };

std::string to_string(Setting s);
std::optional<Setting> setting_from_string(const std::string& s);

struct MeasurementEnsemble {
  Setting setting = Setting::mmv1;
  ProblemParams params;
  std::uint64_t seed = 0;
  Eigen::Index N = 0;
  Eigen::Index M = 0;  // round(R * N)
  Eigen::MatrixXd signal;  // N x J
  // J entries of M x N each; identical settings share one allocation.
  // For complex_complex: matrices[0] = F_real, matrices[1] = F_imag.
  std::vector<std::shared_ptr<const Eigen::MatrixXd>> matrices;
  Eigen::MatrixXd noise;         // M x J
  Eigen::MatrixXd measurements;  // M x J
};

// Deterministic per seed. Signal, matrices, and noise come from split
// substreams of the seed, so two settings generated from the same seed
// share signal and noise exactly (isolating the matrix effect).
MeasurementEnsemble generate(Setting setting, const PriorParams& prior, double delta, double R,
                             Eigen::Index N, std::uint64_t seed);

// The equivalent single-channel real form of a complex_complex ensemble:
// rows (mu, mu+M) hold [F_real, -F_imag; F_imag, F_real] super symbols over
// interleaved column pairs (2l, 2l+1). Rejects other settings.
Eigen::MatrixXd stacked_matrix(const MeasurementEnsemble& ensemble);
Eigen::VectorXd stacked_signal(const MeasurementEnsemble& ensemble);       // 2N, interleaved
Eigen::VectorXd stacked_measurements(const MeasurementEnsemble& ensemble); // 2M = [real; imag]

// How the Monte Carlo covariance check synthesizes estimate "replicas":
// two conditionally independent estimates x^a, x^b of the same signal.
enum class EstimatorSpec {
  perfect,     // x = signal exactly
  prior_draw,  // x = fresh independent draw from the prior
  zero         // x = 0
};

std::string to_string(EstimatorSpec s);
std::optional<EstimatorSpec> estimator_spec_from_string(const std::string& s);

// Empirical second moments of the per-measurement residuals
// v^a_j = F_j (s_j - x^a_j) + z_j, averaged over Monte Carlo ensembles and
// over the four index roles:
//   w1: same replica, same channel      E[(v^a_j)^2]
//   w2: same replica, cross channel     E[v^a_j v^a_eta]
//   w3: cross replica, same channel     E[v^a_j v^b_j]
//   w4: cross replica, cross channel    E[v^a_j v^b_eta]
// (w2/w4 are NaN when J = 1: no channel pairs exist.)
struct CovarianceEstimate {
  double w1 = 0, w2 = 0, w3 = 0, w4 = 0;
  double se1 = 0, se2 = 0, se3 = 0, se4 = 0;  // Monte Carlo standard errors
  int n_mc = 0;
};

// For complex_complex the residual is computed on the stacked channel and
// split into its real/imag halves, giving two channels of M rows each.
// Rejects n_mc < 100 (standard errors meaningless below that).
CovarianceEstimate empirical_v_covariance(Setting setting, const PriorParams& prior, double delta,
                                          double R, Eigen::Index N, EstimatorSpec estimator_spec,
                                          int n_mc, std::uint64_t seed, int jobs = 0);

// Binary ensemble archive (little-endian; shared matrices stored once).
void save_ensemble(const MeasurementEnsemble& ensemble, const std::string& path);
MeasurementEnsemble load_ensemble(const std::string& path);

}  // namespace mmv
