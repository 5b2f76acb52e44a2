#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mmv/common.hpp"
#include "mmv/phase.hpp"
#include "mmv/replica.hpp"
#include "mmv/se.hpp"

using mmv::classify;
using mmv::FreeEnergyProfile;
using mmv::GridSpec;
using mmv::PriorParams;
using mmv::ProblemParams;
using mmv::threshold;
using mmv::ThresholdKind;

namespace {

ProblemParams make_params(double rho, int J, double delta, double R) {
  ProblemParams p;
  p.prior.rho = rho;
  p.prior.J = J;
  p.delta = delta;
  p.R = R;
  return p;
}

// Hand-built profile with prescribed maxima, for definitional classification
// checks that bypass the numerics entirely.
FreeEnergyProfile synthetic_profile(double rho, double delta,
                                    std::vector<mmv::LocalMax> maxima) {
  FreeEnergyProfile prof;
  prof.params = make_params(rho, 2, delta, 0.2);
  prof.local_maxima = std::move(maxima);
  prof.global_max_index = 0;
  for (size_t k = 1; k < prof.local_maxima.size(); ++k) {
    const double dF = prof.local_maxima[k].F - prof.local_maxima[prof.global_max_index].F;
    if (std::abs(dF) < mmv::kTieTolerance)
      prof.degenerate = true;
    else if (dF > 0.0)
      prof.global_max_index = static_cast<int>(k);
  }
  prof.anomalous = prof.local_maxima.empty() || prof.local_maxima.size() > 2;
  return prof;
}

}  // namespace

TEST_CASE("classification follows the maxima structure by definition") {
  const double rho = 0.1, delta = 1e-3;
  const double sep = std::sqrt(delta * rho);  // 0.01

  SUBCASE("two maxima, global at the smaller error") {
    auto prof = synthetic_profile(rho, delta, {{1e-3, 0.5 + 1e-3}, {5e-2, 0.5}});
    auto lab = classify(prof);
    CHECK(lab.value == 2);
    CHECK_FALSE(lab.degenerate);
  }
  SUBCASE("two maxima, global at the larger error") {
    auto prof = synthetic_profile(rho, delta, {{1e-3, 0.5 - 1e-3}, {5e-2, 0.5}});
    CHECK(classify(prof).value == 3);
  }
  SUBCASE("near-tied maxima classify as solvable and flag the tie") {
    auto prof = synthetic_profile(rho, delta, {{1e-3, 0.5 + 1e-11}, {5e-2, 0.5}});
    auto lab = classify(prof);
    CHECK(lab.value == 2);
    CHECK(lab.degenerate);
  }
  SUBCASE("single maximum on either side of the geometric separator") {
    CHECK(classify(synthetic_profile(rho, delta, {{0.3 * sep, 1.0}})).value == 1);
    CHECK(classify(synthetic_profile(rho, delta, {{3.0 * sep, 1.0}})).value == 4);
  }
  SUBCASE("zero or too many maxima throw") {
    CHECK_THROWS_AS(classify(synthetic_profile(rho, delta, {})), mmv::NumericalError);
    CHECK_THROWS_AS(
        classify(synthetic_profile(rho, delta, {{1e-4, 1.0}, {1e-3, 0.9}, {1e-2, 0.8}})),
        mmv::NumericalError);
  }
}

TEST_CASE("real profiles sweep through regions 1..4 as the rate falls") {
  const double delta = std::pow(10.0, -3.5);
  auto region = [&](double R) {
    return classify(mmv::default_profile(make_params(0.1, 3, delta, R))).value;
  };
  CHECK(region(0.24) == 1);
  CHECK(region(0.17) == 1);
  CHECK(region(0.148) == 2);
  CHECK(region(0.134) == 3);
  CHECK(region(0.11) == 4);
}

TEST_CASE("a dense Gaussian prior never produces a two-maxima phase") {
  for (double delta : {1e-4, 1e-2}) {
    for (double R : {0.3, 0.8, 1.5}) {
      auto prof = mmv::default_profile(make_params(1.0, 1, delta, R));
      CHECK(prof.local_maxima.size() == 1);
      const int v = classify(prof).value;
      CHECK((v == 1 || v == 4));
    }
  }
}

TEST_CASE("bisection helper pins a synthetic step boundary") {
  auto pred = [](double x) { return x >= 0.17; };
  const double found = mmv::bisect_boundary(pred, 0.1, 0.3, 1e-6);
  CHECK(std::fabs(found - 0.17) < 1e-6);
  CHECK_THROWS_AS(mmv::bisect_boundary(pred, 0.3, 0.1, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(mmv::bisect_boundary(pred, 0.1, 0.3, 0.0), std::invalid_argument);
}

TEST_CASE("threshold rates are ordered and bracket the region sweep") {
  PriorParams prior;
  prior.rho = 0.1;
  prior.J = 3;
  const double delta = std::pow(10.0, -3.5);
  auto r_bp = threshold(ThresholdKind::bp, prior, delta, 0.10, 0.26);
  auto r_ln = threshold(ThresholdKind::low_noise, prior, delta, 0.10, 0.26);
  auto r_c = threshold(ThresholdKind::critical, prior, delta, 0.10, 0.26);
  REQUIRE(r_bp.has_value());
  REQUIRE(r_ln.has_value());
  REQUIRE(r_c.has_value());
  CHECK(*r_c < *r_ln);
  CHECK(*r_ln < *r_bp);
  // Classifications immediately on each side of the located rates agree.
  auto region = [&](double R) {
    return classify(mmv::default_profile(make_params(0.1, 3, delta, R))).value;
  };
  CHECK(region(*r_bp + 0.003) == 1);
  CHECK(region(*r_bp - 0.003) == 2);
  CHECK(region(*r_ln + 0.002) == 2);
  CHECK(region(*r_ln - 0.002) == 3);
  CHECK(region(*r_c + 0.002) == 3);
  CHECK(region(*r_c - 0.002) == 4);
}

TEST_CASE("a bracket that never crosses reports not-found") {
  PriorParams prior;
  prior.rho = 0.1;
  prior.J = 3;
  const double delta = std::pow(10.0, -3.5);
  // Entirely above the algorithmic rate: the predicate is true everywhere.
  CHECK_FALSE(threshold(ThresholdKind::bp, prior, delta, 0.18, 0.26).has_value());
  // Entirely below: false everywhere.
  CHECK_FALSE(threshold(ThresholdKind::bp, prior, delta, 0.10, 0.12).has_value());
}

TEST_CASE("threshold argument validation") {
  PriorParams prior;
  prior.rho = 0.1;
  prior.J = 2;
  CHECK_THROWS_AS(threshold(ThresholdKind::bp, prior, -1.0, 0.1, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(threshold(ThresholdKind::bp, prior, 1e-3, 0.2, 0.1), std::invalid_argument);
  mmv::ThresholdOptions bad;
  bad.r_tol = 0.0;
  CHECK_THROWS_AS(threshold(ThresholdKind::bp, prior, 1e-3, 0.1, 0.2, bad),
                  std::invalid_argument);
}

TEST_CASE("threshold curve marks not-found deltas with NaN") {
  PriorParams prior;
  prior.rho = 0.1;
  prior.J = 3;
  // At the second noise level every rate in the bracket is already in the
  // single-maximum easy phase, so there is no boundary to find.
  std::vector<double> deltas = {std::pow(10.0, -3.5), 0.1};
  auto curve = mmv::threshold_curve(ThresholdKind::bp, prior, deltas, 0.13, 0.26);
  REQUIRE(curve.R_values.size() == 2);
  CHECK(std::isfinite(curve.R_values[0]));
  CHECK(curve.R_values[0] == doctest::Approx(0.1496).epsilon(2e-3));
  CHECK(std::isnan(curve.R_values[1]));
}

TEST_CASE("grid specification") {
  GridSpec one;
  one.lo = 0.2;
  one.hi = 0.2;
  one.steps = 1;
  CHECK(one.points() == std::vector<double>{0.2});
  GridSpec bad;
  bad.lo = 0.1;
  bad.hi = 0.2;
  bad.steps = 1;
  CHECK_THROWS_AS(bad.points(), std::invalid_argument);
  GridSpec lin;
  lin.lo = -40.0;
  lin.hi = -30.0;
  lin.steps = 3;
  auto pts = lin.points();
  REQUIRE(pts.size() == 3);
  CHECK(pts[0] == doctest::Approx(-40.0));
  CHECK(pts[1] == doctest::Approx(-35.0));
  CHECK(pts[2] == doctest::Approx(-30.0));
  GridSpec rev;
  rev.lo = 0.3;
  rev.hi = 0.2;
  rev.steps = 2;
  CHECK_THROWS_AS(rev.points(), std::invalid_argument);
}

TEST_CASE("a single-cell diagram agrees with the direct computations") {
  PriorParams prior;
  prior.rho = 0.1;
  prior.J = 3;
  GridSpec d;
  d.lo = d.hi = -35.0;
  d.steps = 1;
  GridSpec r;
  r.lo = r.hi = 0.2;
  r.steps = 1;
  auto pd = mmv::phase_diagram(prior, d, r);
  REQUIRE(pd.cells.size() == 1);
  const auto& cell = pd.cells[0];
  CHECK(cell.error.empty());
  const auto params = make_params(0.1, 3, std::pow(10.0, -3.5), 0.2);
  CHECK(cell.delta == doctest::Approx(std::pow(10.0, -3.5)).epsilon(1e-12));
  CHECK(cell.mmse == doctest::Approx(mmv::mmse(params)).epsilon(1e-9));
  CHECK(cell.region.value == classify(mmv::default_profile(params)).value);
  CHECK(cell.bp_mse == doctest::Approx(mmv::bp_predicted_mse(params)).epsilon(1e-9));
}

TEST_CASE("small diagram sweep: regions fall monotonically along the rate axis") {
  PriorParams prior;
  prior.rho = 0.1;
  prior.J = 2;
  GridSpec d;
  d.lo = -40.0;
  d.hi = -30.0;
  d.steps = 2;
  GridSpec r;
  r.lo = 0.12;
  r.hi = 0.24;
  r.steps = 5;
  auto pd = mmv::phase_diagram(prior, d, r);
  REQUIRE(pd.cells.size() == 10);
  for (int di = 0; di < 2; ++di) {
    int prev = 5;
    for (int ri = 0; ri < 5; ++ri) {
      const auto& cell = pd.cells[di * 5 + ri];
      REQUIRE(cell.error.empty());
      CHECK(cell.region.value >= 1);
      CHECK(cell.region.value <= 4);
      CHECK(cell.region.value <= prev);
      prev = cell.region.value;
      CHECK(std::isfinite(cell.mmse));
      CHECK(std::isfinite(cell.bp_mse));
      CHECK(cell.mmse <= cell.bp_mse + 1e-9);
    }
  }
}
