#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mmv/common.hpp"

namespace mmv {

// Jointly sparse Bernoulli-Gaussian prior: each length-J row (super symbol)
// is zero with probability 1 - rho, otherwise drawn from N(0, I_J).
struct PriorParams {
  double rho = 0.1;
  int J = 1;
  void validate() const;  // 0 < rho <= 1, J >= 1
};

// One point of the noisy-measurement phase plane.
struct ProblemParams {
  PriorParams prior;
  double delta = 1e-3;  // measurement noise variance (linear scale)
  double R = 0.2;       // measurement rate M/N
  void validate() const;  // delta > 0, R > 0
};

// Posterior moments of one super symbol observed through J parallel scalar
// Gaussian channels with noise variances sigma_j.
struct DenoiserOutput {
  Eigen::VectorXd mean;           // posterior mean per component
  Eigen::VectorXd second_moment;  // posterior second moment per component
  Eigen::VectorXd variance;       // second_moment - mean^2, assembled in a
                                  // cancellation-free arrangement
  double support_prob = 0.0;      // posterior probability the symbol is nonzero
};

// Draws an N x J signal from the prior. Row fill order is fixed (support
// flag first, then the J slab normals), so output is deterministic per seed.
Eigen::MatrixXd sample_signal(const PriorParams& prior, std::size_t n_rows, std::uint64_t seed);

// Exact posterior mean / second moment of the spike-and-slab super symbol.
// The support likelihood ratio is accumulated in log space, so the output
// stays finite for |pseudodata| up to 1e3 and far beyond.
DenoiserOutput denoise(const PriorParams& prior, const Eigen::VectorXd& sigma,
                       const Eigen::VectorXd& pseudodata);

// Batch form of denoise used by the iterative solver: row l of `pseudodata`
// is denoised against the shared per-channel noises `sigma`. Writes into
// caller-provided arrays (resized as needed); identical arithmetic to
// denoise applied row by row.
void denoise_rows(const PriorParams& prior, const Eigen::VectorXd& sigma,
                  const Eigen::MatrixXd& pseudodata, Eigen::MatrixXd& mean,
                  Eigen::MatrixXd& variance);

// Per-entry MMSE of the prior seen through J parallel scalar Gaussian
// channels with the same noise variance sigma: rho - E[||mean||^2] / J.
// Evaluated by conditioning on the support indicator and reducing both
// branches to 1-D radial integrals; deterministic to ~1e-9 relative.
double mmse_scalar(const PriorParams& prior, double sigma);

}  // namespace mmv
