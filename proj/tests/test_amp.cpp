#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmv/amp.hpp"
#include "mmv/se.hpp"
#include "mmv/sim.hpp"
#include "support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using mmv::AmpConfig;
using mmv::amp_run;
using mmv::generate;
using mmv::PriorParams;
using mmv::Setting;
using mmv::VarianceInit;

namespace {

PriorParams make_prior(double rho, int J) {
  PriorParams p;
  p.rho = rho;
  p.J = J;
  return p;
}

mmv::ProblemParams make_params(double rho, int J, double delta, double R) {
  mmv::ProblemParams p;
  p.prior = make_prior(rho, J);
  p.delta = delta;
  p.R = R;
  return p;
}

// Naive-density spike-and-slab posterior, written with plain normal pdfs.
// Independent of the library's log-space denoiser; fine at moderate values.
void naive_denoise_row(const PriorParams& prior, const VectorXd& sigma, const VectorXd& r,
                       VectorXd& mean, VectorXd& var) {
  const int J = prior.J;
  auto pdf = [](double x, double v) {
    return std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * M_PI * v);
  };
  double on = prior.rho, off = 1.0 - prior.rho;
  for (int j = 0; j < J; ++j) {
    on *= pdf(r[j], 1.0 + sigma[j]);
    off *= pdf(r[j], sigma[j]);
  }
  const double p = on / (on + off);
  mean.resize(J);
  var.resize(J);
  for (int j = 0; j < J; ++j) {
    const double m1 = r[j] / (1.0 + sigma[j]);
    const double v1 = sigma[j] / (1.0 + sigma[j]);
    mean[j] = p * m1;
    var[j] = p * (m1 * m1 + v1) - mean[j] * mean[j];
  }
}

}  // namespace

TEST_CASE("three iterations agree with a literal hand transcription of the recursion") {
  const auto prior = make_prior(0.1, 2);
  const double delta = 0.01;
  auto ens = generate(Setting::mmv1, prior, delta, 0.5, 20, 4242);
  const auto N = static_cast<Eigen::Index>(ens.N);
  const auto M = static_cast<Eigen::Index>(ens.M);
  REQUIRE(M == 10);

  AmpConfig cfg;
  cfg.t_max = 4;  // counter starts at one: exactly three update rounds
  cfg.epsilon = 1e-300;
  auto got = amp_run(ens, prior, cfg);
  REQUIRE(got.iterations == 3);
  REQUIRE(got.mse_trace.size() == 3);

  // Hand transcription with its own denoiser.
  const MatrixXd& y = ens.measurements;
  MatrixXd w = y;
  VectorXd theta = VectorXd::Zero(2);
  MatrixXd v = MatrixXd::Constant(N, 2, prior.rho * delta);
  MatrixXd a = MatrixXd::Zero(N, 2);
  MatrixXd q(M, 2), pseudo(N, 2);
  VectorXd sigma(2);
  std::vector<double> mse_trace, delta_trace;
  for (int t = 1; t < 4; ++t) {
    for (int j = 0; j < 2; ++j) {
      q.col(j) = (y.col(j) - w.col(j)) / (delta + theta[j]);
      theta[j] = v.col(j).mean();
      w.col(j) = (*ens.matrices[j]) * a.col(j) - theta[j] * q.col(j);
      sigma[j] = static_cast<double>(N) * (delta + theta[j]) / static_cast<double>(M);
      pseudo.col(j) = a.col(j) + sigma[j] * (ens.matrices[j]->transpose() *
                                             (y.col(j) - w.col(j))) /
                                     (delta + theta[j]);
    }
    MatrixXd a_prev = a;
    VectorXd mrow, vrow;
    for (Eigen::Index i = 0; i < N; ++i) {
      naive_denoise_row(prior, sigma, pseudo.row(i).transpose(), mrow, vrow);
      a.row(i) = mrow.transpose();
      v.row(i) = vrow.transpose();
    }
    delta_trace.push_back((a_prev - a).squaredNorm() / (2.0 * N));
    mse_trace.push_back((a - ens.signal).squaredNorm() / (2.0 * N));
  }

  for (int k = 0; k < 3; ++k) {
    CHECK(got.mse_trace[k] == doctest::Approx(mse_trace[k]).epsilon(1e-10));
    CHECK(got.delta_trace[k] == doctest::Approx(delta_trace[k]).epsilon(1e-10));
  }
  CHECK((got.estimates - a).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((got.variances - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("overwhelming noise returns the prior-mean estimate") {
  const auto prior = make_prior(0.1, 3);
  auto ens = generate(Setting::mmv1, prior, 1e3, 0.1, 5000, 31);
  auto res = amp_run(ens, prior, {});
  CHECK_FALSE(res.diverged);
  // The estimate collapses toward zero, so the error is the signal power.
  CHECK(res.final_mse() == doctest::Approx(0.1).epsilon(0.05));
  CHECK(res.estimates.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("an all-zero signal is recovered to the noise floor") {
  const auto prior = make_prior(0.1, 2);
  const double delta = 1e-4;
  mmv::MeasurementEnsemble ens;
  ens.setting = Setting::mmv1;
  ens.params = make_params(0.1, 2, delta, 0.3);
  ens.seed = 0;
  ens.N = 400;
  ens.M = 120;
  ens.signal = MatrixXd::Zero(400, 2);
  testsupport::OracleRng rng(8);
  const double scale = 1.0 / std::sqrt(400.0);
  for (int j = 0; j < 2; ++j) {
    auto m = std::make_shared<MatrixXd>(120, 400);
    for (int r = 0; r < 120; ++r)
      for (int c = 0; c < 400; ++c) (*m)(r, c) = scale * rng.normal();
    ens.matrices.push_back(std::move(m));
  }
  ens.noise.resize(120, 2);
  for (int r = 0; r < 120; ++r)
    for (int j = 0; j < 2; ++j) ens.noise(r, j) = std::sqrt(delta) * rng.normal();
  ens.measurements = ens.noise;

  auto res = amp_run(ens, prior, {});
  CHECK_FALSE(res.diverged);
  CHECK(res.final_mse() < 10.0 * delta);
}

TEST_CASE("runs are deterministic given the ensemble and configuration") {
  const auto prior = make_prior(0.1, 2);
  auto ens = generate(Setting::mmv2, prior, 1e-3, 0.25, 600, 12);
  auto r1 = amp_run(ens, prior, {});
  auto r2 = amp_run(ens, prior, {});
  CHECK(r1.iterations == r2.iterations);
  CHECK((r1.estimates.array() == r2.estimates.array()).all());
  CHECK(r1.mse_trace == r2.mse_trace);

  auto ens_again = generate(Setting::mmv2, prior, 1e-3, 0.25, 600, 12);
  auto r3 = amp_run(ens_again, prior, {});
  CHECK((r1.estimates.array() == r3.estimates.array()).all());
}

TEST_CASE("iterates track the scalar recursion within 2 dB over the first ten rounds") {
  const auto prior = make_prior(0.1, 3);
  const double delta = std::pow(10.0, -3.5);
  const double R = 0.22;
  const auto params = make_params(0.1, 3, delta, R);
  auto se = mmv::se_fixed_point(params, prior.rho);
  REQUIRE(se.E_sequence.size() >= 11);

  // The per-trial gap distribution has a long upper tail at this system
  // size, so the median needs a couple dozen trials to be stable.
  const int n_trials = 21;
  AmpConfig cfg;
  cfg.t_max = 12;
  cfg.epsilon = 1e-14;
  cfg.v_init = VarianceInit::prior_variance;
  std::vector<std::vector<double>> traces;
  for (int k = 0; k < n_trials; ++k) {
    auto ens = generate(Setting::mmv1, prior, delta, R, 5000, 9000 + k);
    auto res = amp_run(ens, prior, cfg);
    REQUIRE(res.mse_trace.size() >= 10);
    traces.push_back(res.mse_trace);
  }
  for (int t = 1; t <= 10; ++t) {
    std::vector<double> gaps;
    for (const auto& tr : traces)
      gaps.push_back(std::fabs(10.0 * std::log10(tr[t - 1]) -
                               10.0 * std::log10(se.E_sequence[t])));
    CHECK(mmv::median(gaps) <= 2.0);
  }
}

TEST_CASE("the printed variance seeding breaks early tracking"
          * doctest::may_fail()) {
  // Documented honestly: seeding the variances at rho*delta makes the first
  // residual correction wildly overconfident, and the early iterates leave
  // the scalar recursion's path before rejoining it. The prior-variance
  // seeding above is the form that actually tracks.
  const auto prior = make_prior(0.1, 3);
  const double delta = std::pow(10.0, -3.5);
  const auto params = make_params(0.1, 3, delta, 0.22);
  auto se = mmv::se_fixed_point(params, prior.rho);
  AmpConfig cfg;
  cfg.t_max = 12;
  cfg.epsilon = 1e-14;
  cfg.v_init = VarianceInit::as_printed;
  std::vector<double> gaps;
  for (int k = 0; k < 3; ++k) {
    auto ens = generate(Setting::mmv1, prior, delta, 0.22, 1500, 9100 + k);
    auto res = amp_run(ens, prior, cfg);
    gaps.push_back(std::fabs(10.0 * std::log10(res.mse_trace[0]) -
                             10.0 * std::log10(se.E_sequence[1])));
  }
  CHECK(mmv::median(gaps) <= 2.0);
}

TEST_CASE("error decays monotonically after the opening rounds in the easy phase") {
  const auto prior = make_prior(0.1, 3);
  const double delta = std::pow(10.0, -3.5);
  AmpConfig cfg;
  cfg.v_init = VarianceInit::prior_variance;
  int ok = 0;
  const int n_trials = 10;
  for (int k = 0; k < n_trials; ++k) {
    auto ens = generate(Setting::mmv1, prior, delta, 0.22, 1000, 500 + k);
    auto res = amp_run(ens, prior, cfg);
    REQUIRE(res.converged);
    // Monotone approach to the floor; once within 1.5x of the converged
    // error, finite-size chatter at the percent level is expected.
    const double floor_band = 1.5 * res.final_mse();
    bool monotone = true;
    for (size_t i = 3; i < res.mse_trace.size(); ++i) {
      if (res.mse_trace[i - 1] <= floor_band) break;
      if (res.mse_trace[i] > res.mse_trace[i - 1] * (1.0 + 1e-3)) monotone = false;
    }
    if (monotone) ++ok;
  }
  CHECK(ok >= 9);
}

TEST_CASE("damping still reaches the same error floor") {
  const auto prior = make_prior(0.1, 2);
  auto ens = generate(Setting::mmv1, prior, 1e-3, 0.3, 800, 3);
  auto plain = amp_run(ens, prior, {});
  AmpConfig damped;
  damped.damping = 0.5;
  auto slow = amp_run(ens, prior, damped);
  CHECK_FALSE(slow.diverged);
  CHECK(slow.final_mse() < 3.0 * plain.final_mse() + 1e-12);
  CHECK(slow.iterations >= plain.iterations);
}

TEST_CASE("configuration and ensemble validation") {
  const auto prior = make_prior(0.1, 2);
  auto cc = generate(Setting::complex_complex, prior, 1e-3, 0.3, 100, 1);
  CHECK_THROWS_AS(amp_run(cc, prior, {}), std::invalid_argument);

  auto ens = generate(Setting::mmv1, prior, 1e-3, 0.3, 100, 1);
  CHECK_THROWS_AS(amp_run(ens, make_prior(0.2, 2), {}), std::invalid_argument);
  CHECK_THROWS_AS(amp_run(ens, make_prior(0.1, 3), {}), std::invalid_argument);

  AmpConfig bad;
  bad.t_max = 0;
  CHECK_THROWS_AS(amp_run(ens, prior, bad), std::invalid_argument);
  AmpConfig bad2;
  bad2.epsilon = 0.0;
  CHECK_THROWS_AS(amp_run(ens, prior, bad2), std::invalid_argument);
  AmpConfig bad3;
  bad3.damping = 1.0;
  CHECK_THROWS_AS(amp_run(ens, prior, bad3), std::invalid_argument);
}

TEST_CASE("sweep smoke: shapes, determinism, and sane aggregates") {
  const auto prior = make_prior(0.1, 2);
  AmpConfig cfg;
  cfg.v_init = VarianceInit::prior_variance;
  auto sweep = mmv::amp_sweep(Setting::mmv1, prior, {-35.0}, {0.22}, 250, 3, cfg, 71);
  REQUIRE(sweep.cells.size() == 1);
  const auto& cell = sweep.cells[0];
  CHECK(cell.error.empty());
  REQUIRE(cell.trials.size() == 3);
  for (const auto& tr : cell.trials) {
    CHECK(tr.error.empty());
    CHECK(std::isfinite(tr.mse));
    CHECK_FALSE(tr.mse_trace.empty());
  }
  CHECK(std::isfinite(cell.median_mse));
  CHECK(std::isfinite(cell.se_mse));
  CHECK(cell.se_mse > 0.0);
  CHECK(std::isfinite(cell.ratio_ln));
  CHECK(cell.delta_db == -35.0);
  CHECK(cell.delta == doctest::Approx(std::pow(10.0, -3.5)));

  auto again = mmv::amp_sweep(Setting::mmv1, prior, {-35.0}, {0.22}, 250, 3, cfg, 71);
  CHECK(again.cells[0].median_mse == cell.median_mse);
  CHECK(again.cells[0].trials[1].mse == cell.trials[1].mse);
}
