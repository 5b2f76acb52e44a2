#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmv/replica.hpp"

namespace mmv {

// Performance regions, ordered by increasing measurement rate at fixed
// noise: 4 (hard) -> 3 -> 2 -> 1 (easy).
//   1: one maximum at small E (solvable, iterative solvers reach it)
//   2: two maxima, global at the smaller E (solvable, but iterative
//      solvers stall at the larger E)
//   3: two maxima, global at the larger E
//   4: one maximum at large E (undersampled)
struct RegionLabel {
  int value = 0;           // 1..4
  bool degenerate = false; // the two maxima tied in F at this point
};

enum class ThresholdKind { bp, low_noise, critical };

std::string to_string(ThresholdKind kind);
std::optional<ThresholdKind> threshold_kind_from_string(const std::string& s);

struct ThresholdOptions {
  double r_tol = 1e-4;     // bisection stops when the bracket is this narrow
  int prescan_points = 16; // bracket sanity scan before bisecting
  int n_grid = 256;        // free-energy profile resolution per classify call
};

// R(delta) samples of one threshold curve; NaN marks not-found points.
struct ThresholdCurve {
  ThresholdKind kind = ThresholdKind::bp;
  std::vector<double> delta_grid;
  std::vector<double> R_values;
};

// Inclusive linear grid over [lo, hi]; steps == 1 requires lo == hi.
struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;
  std::vector<double> points() const;
};

struct PhaseCell {
  double delta_db = 0.0;
  double delta = 0.0;
  double R = 0.0;
  double mmse = 0.0;
  RegionLabel region;
  double bp_mse = 0.0;
  std::string error;  // nonempty if this cell failed; values are NaN then
};

struct PhaseDiagram {
  PriorParams prior;
  GridSpec delta_spec_db;
  GridSpec R_spec;
  std::vector<PhaseCell> cells;  // row-major: delta outer, R inner
};

// Region from a computed free-energy profile. Throws NumericalError on
// profiles with zero or more than two maxima.
RegionLabel classify(const FreeEnergyProfile& profile);

// Bisects a monotone false -> true predicate over [lo, hi] down to a bracket
// of width tol; returns the bracket midpoint. Assumes pred(lo) is false and
// pred(hi) is true.
double bisect_boundary(const std::function<bool(double)>& pred, double lo, double hi,
                       double tol);

// Locates the boundary rate by bisecting the region classification over
// [R_lo, R_hi]. The defining predicate is true on the high-R side:
//   bp       : region == 1      (second maximum appears below)
//   low_noise: region <= 2      (F-tie between the maxima)
//   critical : region <= 3      (small-E maximum disappears below)
// Returns nullopt when the bracket never crosses; throws NumericalError if
// the prescan sees multiple crossings or a crossing in the wrong direction.
std::optional<double> threshold(ThresholdKind kind, const PriorParams& prior, double delta,
                                double R_lo, double R_hi, const ThresholdOptions& opts = {});

ThresholdCurve threshold_curve(ThresholdKind kind, const PriorParams& prior,
                               const std::vector<double>& delta_grid, double R_lo, double R_hi,
                               const ThresholdOptions& opts = {});

// Dense (delta, R) sweep of mmse / region / iterative-solver MSE. Cell
// failures are recorded in the cell, never abort the sweep. `jobs` as in
// parallel_for.
PhaseDiagram phase_diagram(const PriorParams& prior, const GridSpec& delta_range_db,
                           const GridSpec& R_range, int jobs = 0);

}  // namespace mmv
