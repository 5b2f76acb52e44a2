#pragma once

#include <vector>

#include "mmv/model.hpp"

namespace mmv {

// One refined local maximum of the free energy curve E -> F(E).
struct LocalMax {
  double E = 0.0;
  double F = 0.0;
};

// F evaluated on a log-spaced MSE grid plus its refined interior maxima.
struct FreeEnergyProfile {
  ProblemParams params;
  std::vector<double> E_grid;    // strictly increasing, positive
  std::vector<double> F_values;  // same length as E_grid
  std::vector<LocalMax> local_maxima;  // sorted by E
  int global_max_index = -1;     // index into local_maxima
  bool degenerate = false;       // two maxima with an F-tie below kTieTolerance
  bool anomalous = false;        // maxima count outside {1, 2}

  const LocalMax& global_max() const { return local_maxima.at(global_max_index); }
};

// Two maxima closer in F than this are reported as a tie (degenerate), with
// the smaller-E one marked global.
inline constexpr double kTieTolerance = 1e-10;
// Golden-section termination: bracket width below this relative size.
inline constexpr double kRefineRelTol = 1e-10;
inline constexpr int kDefaultProfileGrid = 256;

// Replica free energy at squared error E. Larger F means a more probable
// error level; the global maximizer over E is the predicted MMSE.
double free_energy(const ProblemParams& params, double E);

// Samples F on a log-spaced grid over [E_min, E_max], finds interior local
// maxima by 3-point comparison, refines each by golden-section search in
// log E, and marks the global one (ties: smaller E wins, degenerate set).
FreeEnergyProfile profile(const ProblemParams& params, double E_min, double E_max, int n_grid);

// profile over the standard search window [delta * 1e-3, 1.05 * rho].
FreeEnergyProfile default_profile(const ProblemParams& params);

// E at the global maximum of the default profile.
double mmse(const ProblemParams& params);

}  // namespace mmv
