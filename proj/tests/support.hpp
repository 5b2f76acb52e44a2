#pragma once

// Shared oracle helpers for the test binaries. Everything here is an
// independent computation route: different quadrature rules and a different
// random number generator family than the library under test.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace testsupport {

// Gauss-Hermite rule for E[f(X)] with X standard normal (probabilists'
// weight), built by Golub-Welsch: eigen-decompose the symmetric tridiagonal
// recurrence matrix with off-diagonals sqrt(k).
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // sum to 1

  explicit GaussHermite(int n) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      const double b = std::sqrt(static_cast<double>(k));
      jacobi(k, k - 1) = b;
      jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    nodes = es.eigenvalues();
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
      const double v0 = es.eigenvectors()(0, i);
      weights[i] = v0 * v0;
    }
  }

  double expect(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

// Composite Simpson rule on [a, b] with n subintervals (n made even).
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Mean and Monte Carlo standard error of a sample.
struct McStat {
  double mean = 0.0;
  double se = 0.0;
};

inline McStat mc_stat(const std::vector<double>& xs) {
  McStat st;
  const auto n = static_cast<double>(xs.size());
  for (double x : xs) st.mean += x;
  st.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - st.mean) * (x - st.mean);
  st.se = std::sqrt(ss / (n * (n - 1.0)));
  return st;
}

// Binomial(n, p) quantile by direct CDF scan (log-space pmf, stable to
// n ~ 1e6). Returns the smallest k with CDF(k) >= q.
inline long binomial_quantile(long n, double p, double q) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("binomial_quantile: p in (0,1)");
  const double lp = std::log(p), lq = std::log1p(-p);
  double cdf = 0.0;
  for (long k = 0; k <= n; ++k) {
    const double lpmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                        k * lp + (n - k) * lq;
    cdf += std::exp(lpmf);
    if (cdf >= q) return k;
  }
  return n;
}

// Deterministic mt19937_64-based normal source, an independent generator
// family from the library's own streams.
class OracleRng {
 public:
  explicit OracleRng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double chi_square(int dof) {
    return chi2_(engine_, std::chi_squared_distribution<double>::param_type(dof));
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::chi_squared_distribution<double> chi2_;
};

}  // namespace testsupport
