#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mmv/model.hpp"
#include "mmv/replica.hpp"
#include "mmv/se.hpp"

using mmv::bp_predicted_mse;
using mmv::ProblemParams;
using mmv::se_fixed_point;
using mmv::SeOptions;

namespace {

ProblemParams make_params(double rho, int J, double delta, double R) {
  ProblemParams p;
  p.prior.rho = rho;
  p.prior.J = J;
  p.delta = delta;
  p.R = R;
  return p;
}

double gaussian_root(double R, double delta) {
  const double b = R + delta - 1.0;
  return 0.5 * (-b + std::sqrt(b * b + 4.0 * delta));
}

}  // namespace

TEST_CASE("full-density fixed point equals the analytic quadratic root") {
  for (double R : {0.5, 1.0, 2.0}) {
    for (double delta : {1e-4, 1e-2, 0.5}) {
      const auto p = make_params(1.0, 1, delta, R);
      auto tr = se_fixed_point(p, 1.0);
      CHECK(tr.converged);
      CHECK(std::fabs(tr.fixed_point - gaussian_root(R, delta)) < 1e-8);
    }
  }
}

TEST_CASE("at high rate the iteration collapses to a near-noiseless fixed point") {
  const auto p = make_params(0.1, 2, 1e-4, 10.0);
  auto tr = se_fixed_point(p, 0.1);
  CHECK(tr.converged);
  CHECK(tr.fixed_point < std::pow(10.0, -4.5));
}

TEST_CASE("in the single-peak easy phase the fixed point equals the potential's maximizer") {
  const auto p = make_params(0.1, 3, std::pow(10.0, -3.5), 0.23);
  auto tr = se_fixed_point(p, p.prior.rho);
  CHECK(tr.converged);
  CHECK(std::fabs(tr.fixed_point - mmv::mmse(p)) < 1e-5);
}

TEST_CASE("from uninformed initialization the iteration lands on the larger maximum") {
  // Inside the two-maxima band, the cold-start fixed point is the
  // larger-error local maximum whether or not it is global.
  const double delta = std::pow(10.0, -3.5);
  for (double R : {0.148, 0.134}) {
    const auto p = make_params(0.1, 3, delta, R);
    auto prof = mmv::default_profile(p);
    REQUIRE(prof.local_maxima.size() == 2);
    const double big = prof.local_maxima.back().E;
    const double small = prof.local_maxima.front().E;
    const double fp = bp_predicted_mse(p);
    CHECK(std::fabs(fp - big) < 1e-5);
    CHECK(fp > 10.0 * small);
  }
}

TEST_CASE("fixed points are stationary points of the free energy") {
  const double delta = std::pow(10.0, -3.5);
  for (double R : {0.145, 0.20}) {
    const auto p = make_params(0.1, 3, delta, R);
    const double fp = se_fixed_point(p, p.prior.rho).fixed_point;
    const double h = 1e-6 * fp;
    const double grad =
        (mmv::free_energy(p, fp + h) - mmv::free_energy(p, fp - h)) / (2.0 * h);
    // Scale by the local curvature proxy so the check is dimensionless.
    CHECK(std::fabs(grad) * fp < 1e-3);
  }
}

TEST_CASE("the predicted error jumps by an order of magnitude across the algorithmic rate") {
  const double delta = std::pow(10.0, -3.5);
  // The larger maximum disappears between these two rates.
  const double below = bp_predicted_mse(make_params(0.1, 3, delta, 0.147));
  const double above = bp_predicted_mse(make_params(0.1, 3, delta, 0.153));
  CHECK(below > 10.0 * above);
}

TEST_CASE("iterates decrease monotonically from the uninformed start") {
  const auto p = make_params(0.1, 3, std::pow(10.0, -3.5), 0.18);
  auto tr = se_fixed_point(p, p.prior.rho);
  REQUIRE(tr.E_sequence.size() >= 2);
  CHECK(tr.E_sequence.front() == 0.1);
  for (size_t i = 1; i < tr.E_sequence.size(); ++i)
    CHECK(tr.E_sequence[i] <= tr.E_sequence[i - 1] + 1e-14);
  CHECK(tr.E_sequence.back() == doctest::Approx(tr.fixed_point));
}

TEST_CASE("iteration cap reports non-convergence honestly") {
  SeOptions opts;
  opts.max_iter = 3;
  const auto p = make_params(0.1, 3, std::pow(10.0, -3.5), 0.18);
  auto tr = se_fixed_point(p, p.prior.rho, opts);
  CHECK_FALSE(tr.converged);
  CHECK(tr.E_sequence.size() == 4);  // E0 plus three iterates
}

TEST_CASE("argument validation") {
  const auto p = make_params(0.1, 2, 1e-3, 0.2);
  CHECK_THROWS_AS(se_fixed_point(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(se_fixed_point(p, 0.2), std::invalid_argument);  // above the prior power
  CHECK_THROWS_AS(se_fixed_point(p, -0.05), std::invalid_argument);
  SeOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(se_fixed_point(p, 0.05, bad), std::invalid_argument);
  SeOptions bad2;
  bad2.max_iter = 0;
  CHECK_THROWS_AS(se_fixed_point(p, 0.05, bad2), std::invalid_argument);
}
