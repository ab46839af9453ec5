#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scbc/collect.hpp"
#include "scbc/conformity.hpp"
#include "scbc/soscompile.hpp"
#include "scbc/synth.hpp"

namespace scbc {

struct SynthesisOptions {
  std::vector<double> kappas{1.0};
  std::vector<double> rhos{0.01};
  SosDegrees degrees;
  SosFloors floors;
  AssembleOptions assemble;
  std::optional<double> epsilon;       // unset: solve beta2bar_target for epsilon
  double beta2bar_target = 0.0;        // unset (0): 0.01 / T
  ConformityMode mode = ConformityMode::Stochastic;
  double varkappa = 0.15;              // robust mode bound
  int safety_horizon = 100;
  SolveOptions solver;
};

struct GridEntry {
  double kappa = 0.0, rho = 0.0;
  SolveStatus status = SolveStatus::Stalled;
  double beta1 = 1.0;
  std::string note;
};

struct SynthesisOutcome {
  std::optional<Certificate> best;
  std::vector<GridEntry> grid;
  ConfidenceSetup setup;       // stochastic mode bookkeeping
  ExcitationReport excitation;
  double epsilon_used = 0.0;

  bool feasible() const { return best.has_value(); }
};

// Runs the full data-to-certificate pipeline over the (kappa, rho) grid and
// keeps the certificate with the smallest beta1. Touches only the public
// batch payload, the dictionaries and the declared noise bounds.
SynthesisOutcome synthesize(const TrajectoryBatch& batch, const MonomialBasis& f_basis,
                            const PolyMatrix& g_poly, const RegionSpec& regions,
                            const Eigen::MatrixXd& gamma_mu, const Eigen::MatrixXd& gamma_sigma,
                            const SynthesisOptions& options);

// Pooled variant: several independent experiments (each with its own initial
// state and input sequence, all with the same realization count) contribute
// their conformity blocks jointly; the union bound runs over all of them, so
// beta2 = (total block count) * beta2bar. Sign-diverse starts break the
// dictionary collinearity a single trajectory cannot.
SynthesisOutcome synthesize(const std::vector<const TrajectoryBatch*>& batches,
                            const MonomialBasis& f_basis, const PolyMatrix& g_poly,
                            const RegionSpec& regions, const Eigen::MatrixXd& gamma_mu,
                            const Eigen::MatrixXd& gamma_sigma, const SynthesisOptions& options);

}  // namespace scbc
