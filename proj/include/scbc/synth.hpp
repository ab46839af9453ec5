#pragma once

#include <string>

#include "scbc/conformity.hpp"
#include "scbc/regions.hpp"
#include "scbc/soscompile.hpp"
#include "scbc/system.hpp"

namespace scbc {

// Largest value of x^T P x over the box (attained at a vertex).
double level_eta(const Eigen::MatrixXd& p, const Box& initial_box);

// Smallest value of x^T P x over the union of boxes, solved exactly by
// active-set enumeration over the 3^n face patterns. Empty union gives +inf.
double level_delta(const Eigen::MatrixXd& p, const std::vector<Box>& unsafe_boxes);

// Martingale offset psi = (1 + 1/rho) Tr(P Gamma_mu) + Tr(P Gamma_Sigma).
double psi_offset(const Eigen::MatrixXd& p, const Eigen::MatrixXd& gamma_mu,
                  const Eigen::MatrixXd& gamma_sigma, double rho);

// Finite-horizon escape bound, two branches on delta vs psi/(1-kappa).
// Requires kappa in (0,1); result clamped to [0,1].
double beta1_theorem(double eta, double delta, double psi, double kappa, int horizon);

// Relaxed bound (eta + psi * horizon) / delta, valid at kappa = 1; clamped.
double beta1_relaxed(double eta, double delta, double psi, int horizon);

// Infinite-horizon bound eta/delta; only valid when psi == 0, so the caller
// passes the psi it holds and the call refuses nonzero values.
double beta1_infinite(double eta, double delta, double psi_context);

struct Certificate {
  Eigen::MatrixXd p;          // B(x) = x^T P x
  Controller controller;      // u = K(x) x
  double eta = 0.0, delta = 0.0, psi = 0.0;
  double kappa = 0.0, rho = 0.0;
  int horizon = 0;            // safety horizon
  double beta1 = 1.0, beta2 = 1.0, beta2bar = 1.0;
  std::string beta1_branch;   // "theorem-1", "theorem-2", or "relaxed"
  ConformityMode mode = ConformityMode::Stochastic;
  bool vacuous_confidence = false;
  std::string status;         // "ok" or "levels-violated"
  std::string batch_hash;
  double solver_primal_residual = 0.0, solver_dual_residual = 0.0, solver_gap = 0.0;

  bool ok() const { return status == "ok"; }
  std::string guarantee_line() const;

  std::string to_json_string() const;
  static Certificate from_json_string(const std::string& text);  // validates invariants
};

// Recovers (P, K) from a solved program, computes the level sets, offset and
// guarantees. Fails with status "levels-violated" when eta >= delta; throws
// on singular or overly ill-conditioned Pbar. `state_scale` undoes the state
// equilibration congruence when the program was assembled in scaled
// coordinates (empty: identity); `regions` are always the original ones.
Certificate recover_certificate(const SdpProblem& problem, const ConicSolution& solution,
                                const RegionSpec& regions, const Eigen::MatrixXd& gamma_mu,
                                const Eigen::MatrixXd& gamma_sigma, int safety_horizon,
                                double beta2bar, bool beta2bar_vacuous, ConformityMode mode,
                                const std::string& batch_hash,
                                const Eigen::VectorXd& state_scale = Eigen::VectorXd());

}  // namespace scbc
