#pragma once

#include <string>

#include "scbc/synth.hpp"
#include "scbc/system.hpp"

namespace scbc {

// Worst grid value of E[B(x+)] - kappa B(x) - psi with u = K(x) x, using the
// exact expectation for quadratic B against the true model moments.
double check_martingale(const SystemModel& model, const Certificate& cert, const Box& state_box,
                        int grid_points_per_axis = 21);

struct LevelMargins {
  double eta_margin = 0.0;    // eta - max_grid B over the initial box
  double delta_margin = 0.0;  // min_grid B over the unsafe boxes - delta
};

LevelMargins check_levels(const Certificate& cert, const RegionSpec& regions,
                          int grid_points_per_axis = 21);

struct McResult {
  int runs = 0;
  int safe = 0;
  double fraction = 0.0;
  double wilson_lower = 0.0;  // one-sided lower bound at level 0.999
  bool pass = false;          // wilson_lower >= 1 - beta1 - slack
};

// Monte Carlo closed-loop safety estimate; initial states uniform over the
// initial box, overflow aborts counted unsafe. Requires runs >= 1000.
McResult mc_safety(const SystemModel& model, const Certificate& cert, const RegionSpec& regions,
                   int horizon, int runs, SeedStream stream, double slack = 0.0);

// Empirical frequency of Frobenius deviations >= epsilon over repeated
// redraws of N samples. Requires repetitions >= 1000.
double lemma1_frequency(const NoiseSpec& noise, int realizations, double epsilon, int repetitions,
                        SeedStream stream);

struct VerificationReport {
  int grid_points = 0;
  double martingale_margin = 0.0;
  bool martingale_pass = false;
  LevelMargins levels;
  bool levels_pass = false;
  McResult mc;
  bool all_pass = false;

  std::string to_json_string() const;
};

VerificationReport run_verification(const SystemModel& model, const Certificate& cert,
                                    const RegionSpec& regions, int grid_points, int mc_runs,
                                    SeedStream stream, double martingale_tolerance = 1e-6);

}  // namespace scbc
