#include "mmv/model.hpp"

#include <cmath>

#include "mmv/quadrature.hpp"
#include "mmv/rng.hpp"

namespace mmv {
namespace {

// p = 1 / (1 + exp(L)) evaluated without overflow on either tail.
double logistic_neg(double L) {
  if (L >= 0.0) {
    const double e = std::exp(-L);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(L));
}

// Log odds of the zero branch against the slab branch given the pseudodata:
// L = log((1-rho)/rho) + sum_j [ log sqrt(1 + 1/sigma_j)
//                                - R_j^2 / (2 sigma_j (sigma_j + 1)) ].
// support_prob = 1 / (1 + exp(L)). At rho = 1 the first term is -inf and
// the probability saturates at 1, which is the intended limit.
double support_logit(const PriorParams& prior, const Eigen::VectorXd& sigma,
                     const Eigen::VectorXd& pseudodata) {
  double L = std::log((1.0 - prior.rho) / prior.rho);
  for (int j = 0; j < prior.J; ++j) {
    const double s = sigma[j];
    L += 0.5 * std::log1p(1.0 / s) - pseudodata[j] * pseudodata[j] / (2.0 * s * (s + 1.0));
  }
  return L;
}

void check_sigma(const PriorParams& prior, const Eigen::VectorXd& sigma) {
  if (sigma.size() != prior.J)
    throw std::invalid_argument("denoise: sigma must have length J");
  for (int j = 0; j < prior.J; ++j)
    if (!(sigma[j] > 0.0) || !std::isfinite(sigma[j]))
      throw std::invalid_argument("denoise: sigma entries must be positive and finite");
}

}  // namespace

void PriorParams::validate() const {
  if (!(rho > 0.0) || !(rho <= 1.0))
    throw std::invalid_argument("PriorParams: rho must lie in (0, 1]");
  if (J < 1) throw std::invalid_argument("PriorParams: J must be >= 1");
}

void ProblemParams::validate() const {
  prior.validate();
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("ProblemParams: delta must be positive and finite");
  if (!(R > 0.0) || !std::isfinite(R))
    throw std::invalid_argument("ProblemParams: R must be positive and finite");
}

Eigen::MatrixXd sample_signal(const PriorParams& prior, std::size_t n_rows, std::uint64_t seed) {
  prior.validate();
  if (n_rows == 0) throw std::invalid_argument("sample_signal: N must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), prior.J);
  for (Eigen::Index l = 0; l < s.rows(); ++l) {
    if (rng.uniform() < prior.rho) {
      for (int j = 0; j < prior.J; ++j) s(l, j) = rng.normal();
    }
  }
  return s;
}

DenoiserOutput denoise(const PriorParams& prior, const Eigen::VectorXd& sigma,
                       const Eigen::VectorXd& pseudodata) {
  prior.validate();
  check_sigma(prior, sigma);
  if (pseudodata.size() != prior.J)
    throw std::invalid_argument("denoise: pseudodata must have length J");
  const double p = logistic_neg(support_logit(prior, sigma, pseudodata));
  DenoiserOutput out;
  out.support_prob = p;
  out.mean.resize(prior.J);
  out.second_moment.resize(prior.J);
  out.variance.resize(prior.J);
  for (int j = 0; j < prior.J; ++j) {
    const double m1 = pseudodata[j] / (sigma[j] + 1.0);  // slab posterior mean
    const double v1 = sigma[j] / (sigma[j] + 1.0);       // slab posterior variance
    out.mean[j] = p * m1;
    out.second_moment[j] = p * (m1 * m1 + v1);
    // variance = second_moment - mean^2 rearranged as p(1-p) m1^2 + p v1,
    // which cannot cancel catastrophically when p -> 1 and m1 is large.
    out.variance[j] = p * (1.0 - p) * m1 * m1 + p * v1;
  }
  return out;
}

void denoise_rows(const PriorParams& prior, const Eigen::VectorXd& sigma,
                  const Eigen::MatrixXd& pseudodata, Eigen::MatrixXd& mean,
                  Eigen::MatrixXd& variance) {
  prior.validate();
  check_sigma(prior, sigma);
  if (pseudodata.cols() != prior.J)
    throw std::invalid_argument("denoise_rows: pseudodata must have J columns");
  const Eigen::Index n = pseudodata.rows();
  mean.resize(n, prior.J);
  variance.resize(n, prior.J);
  Eigen::ArrayXd L = Eigen::ArrayXd::Constant(n, std::log((1.0 - prior.rho) / prior.rho));
  for (int j = 0; j < prior.J; ++j) {
    const double s = sigma[j];
    L += 0.5 * std::log1p(1.0 / s) -
         pseudodata.col(j).array().square() / (2.0 * s * (s + 1.0));
  }
  const Eigen::ArrayXd p = L.unaryExpr([](double x) { return logistic_neg(x); });
  for (int j = 0; j < prior.J; ++j) {
    const double s = sigma[j];
    const double v1 = s / (s + 1.0);
    const Eigen::ArrayXd m1 = pseudodata.col(j).array() / (s + 1.0);
    mean.col(j) = p * m1;
    variance.col(j) = p * (1.0 - p) * m1.square() + p * v1;
  }
}

double mmse_scalar(const PriorParams& prior, double sigma) {
  prior.validate();
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("mmse_scalar: sigma must be positive and finite");
  const double rho = prior.rho;
  const int J = prior.J;
  if (rho == 1.0) return sigma / (1.0 + sigma);  // Gaussian prior, closed form

  // Condition on the support indicator. Conditioned either way, the squared
  // norm of the pseudodata super symbol is a scaled chi-square(J) variable,
  // and E||mean||^2 depends on the pseudodata only through that norm:
  //   on support:  ||Rdata||^2 = (1+sigma) x,   x ~ chi2(J)
  //   off support: ||Rdata||^2 = sigma x
  // with mean_j = p(||Rdata||^2) Rdata_j / (1+sigma).
  const double t = 1.0 / (2.0 * sigma * (sigma + 1.0));
  const double L0 = std::log((1.0 - rho) / rho) + 0.5 * J * std::log1p(1.0 / sigma);
  const double s1 = sigma + 1.0;
  auto g_on = [&](double x) {
    const double c = s1 * x;
    const double p = logistic_neg(L0 - t * c);
    return p * p * c;
  };
  auto g_off = [&](double x) {
    const double c = sigma * x;
    const double p = logistic_neg(L0 - t * c);
    return p * p * c;
  };
  QuadratureOptions opts;
  opts.rel_tol = 1e-12;
  opts.abs_tol = 1e-15;
  opts.initial_panels = 16;
  // Seed the subdivision at the logistic transition ||Rdata||^2 = L0 / t.
  double hint_on[1], hint_off[1];
  std::size_t n_on = 0, n_off = 0;
  if (L0 > 0.0) {
    hint_on[n_on++] = L0 / (t * s1);
    hint_off[n_off++] = L0 / (t * sigma);
  }
  const double e_on = radial_gaussian_expectation(g_on, J, opts, {hint_on, n_on});
  const double e_off = radial_gaussian_expectation(g_off, J, opts, {hint_off, n_off});
  const double mean_norm2 = (rho * e_on + (1.0 - rho) * e_off) / (s1 * s1);
  return rho - mean_norm2 / J;
}

}  // namespace mmv
