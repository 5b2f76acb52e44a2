#include "mmv/phase.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mmv/parallel.hpp"
#include "mmv/se.hpp"

namespace mmv {
namespace {

bool region_predicate(ThresholdKind kind, int region) {
  switch (kind) {
    case ThresholdKind::bp: return region == 1;
    case ThresholdKind::low_noise: return region <= 2;
    case ThresholdKind::critical: return region <= 3;
  }
  throw std::invalid_argument("threshold: unknown kind");
}

}  // namespace

std::string to_string(ThresholdKind kind) {
  switch (kind) {
    case ThresholdKind::bp: return "bp";
    case ThresholdKind::low_noise: return "low_noise";
    case ThresholdKind::critical: return "critical";
  }
  return "?";
}

std::optional<ThresholdKind> threshold_kind_from_string(const std::string& s) {
  if (s == "bp") return ThresholdKind::bp;
  if (s == "low_noise") return ThresholdKind::low_noise;
  if (s == "critical") return ThresholdKind::critical;
  return std::nullopt;
}

std::vector<double> GridSpec::points() const {
  if (steps < 1) throw std::invalid_argument("GridSpec: steps must be >= 1");
  if (!(lo <= hi)) throw std::invalid_argument("GridSpec: require lo <= hi");
  if (steps == 1) {
    if (lo != hi) throw std::invalid_argument("GridSpec: steps == 1 requires lo == hi");
    return {lo};
  }
  std::vector<double> p(steps);
  for (int i = 0; i < steps; ++i) p[i] = lo + (hi - lo) * i / (steps - 1);
  return p;
}

RegionLabel classify(const FreeEnergyProfile& profile) {
  const std::size_t n = profile.local_maxima.size();
  if (n == 0) throw NumericalError("classify: profile has no local maxima");
  if (n > 2) throw NumericalError("classify: profile has more than two local maxima");
  RegionLabel label;
  label.degenerate = profile.degenerate;
  if (n == 2) {
    label.value = (profile.global_max_index == 0) ? 2 : 3;
  } else {
    // Single maximum: small-error branch vs large-error branch, separated
    // at the geometric mean of the two natural scales delta and rho.
    const double sep = std::sqrt(profile.params.delta * profile.params.prior.rho);
    label.value = (profile.local_maxima[0].E < sep) ? 1 : 4;
  }
  return label;
}

std::optional<double> threshold(ThresholdKind kind, const PriorParams& prior, double delta,
                                double R_lo, double R_hi, const ThresholdOptions& opts) {
  prior.validate();
  if (!(delta > 0.0)) throw std::invalid_argument("threshold: delta must be positive");
  if (!(R_lo > 0.0) || !(R_lo < R_hi))
    throw std::invalid_argument("threshold: require 0 < R_lo < R_hi");
  if (opts.prescan_points < 2)
    throw std::invalid_argument("threshold: prescan_points must be >= 2");
  if (!(opts.r_tol > 0.0)) throw std::invalid_argument("threshold: r_tol must be positive");

  auto pred_at = [&](double R) {
    ProblemParams params{prior, delta, R};
    const FreeEnergyProfile p =
        profile(params, delta * 1e-3, 1.05 * prior.rho, opts.n_grid);
    return region_predicate(kind, classify(p).value);
  };

  // Sanity scan: the predicate must make exactly one false -> true step.
  std::vector<char> flags(opts.prescan_points);
  std::vector<double> xs(opts.prescan_points);
  for (int i = 0; i < opts.prescan_points; ++i) {
    xs[i] = R_lo + (R_hi - R_lo) * i / (opts.prescan_points - 1);
    flags[i] = pred_at(xs[i]) ? 1 : 0;
  }
  int flips = 0, flip_at = -1;
  for (int i = 0; i + 1 < opts.prescan_points; ++i) {
    if (flags[i] != flags[i + 1]) {
      ++flips;
      flip_at = i;
    }
  }
  if (flips == 0) return std::nullopt;  // bracket never crosses the boundary
  if (flips > 1 || flags[0] || !flags[opts.prescan_points - 1]) {
    std::ostringstream msg;
    msg << "threshold(" << to_string(kind) << "): non-monotone classification over ["
        << R_lo << ", " << R_hi << "] at delta=" << delta << " (" << flips << " crossings)";
    throw NumericalError(msg.str());
  }

  return bisect_boundary(pred_at, xs[flip_at], xs[flip_at + 1], opts.r_tol);
}

double bisect_boundary(const std::function<bool(double)>& pred, double lo, double hi,
                       double tol) {
  if (!(lo < hi) || !(tol > 0.0))
    throw std::invalid_argument("bisect_boundary: require lo < hi and tol > 0");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

ThresholdCurve threshold_curve(ThresholdKind kind, const PriorParams& prior,
                               const std::vector<double>& delta_grid, double R_lo, double R_hi,
                               const ThresholdOptions& opts) {
  ThresholdCurve curve;
  curve.kind = kind;
  curve.delta_grid = delta_grid;
  curve.R_values.resize(delta_grid.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    const auto r = threshold(kind, prior, delta_grid[i], R_lo, R_hi, opts);
    if (r) curve.R_values[i] = *r;
  }
  return curve;
}

PhaseDiagram phase_diagram(const PriorParams& prior, const GridSpec& delta_range_db,
                           const GridSpec& R_range, int jobs) {
  prior.validate();
  PhaseDiagram diagram;
  diagram.prior = prior;
  diagram.delta_spec_db = delta_range_db;
  diagram.R_spec = R_range;
  const std::vector<double> deltas_db = delta_range_db.points();
  const std::vector<double> rates = R_range.points();
  diagram.cells.resize(deltas_db.size() * rates.size());

  parallel_for(diagram.cells.size(), jobs, [&](std::size_t idx) {
    const std::size_t di = idx / rates.size();
    const std::size_t ri = idx % rates.size();
    PhaseCell& cell = diagram.cells[idx];
    cell.delta_db = deltas_db[di];
    cell.delta = from_db(deltas_db[di]);
    cell.R = rates[ri];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
      ProblemParams params{prior, cell.delta, cell.R};
      const FreeEnergyProfile p = default_profile(params);
      cell.region = classify(p);
      cell.mmse = p.global_max().E;
      cell.bp_mse = bp_predicted_mse(params);
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.mmse = nan;
      cell.bp_mse = nan;
      cell.region = RegionLabel{};
    }
  });
  return diagram;
}

}  // namespace mmv
