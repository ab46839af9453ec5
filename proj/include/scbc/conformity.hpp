#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "scbc/collect.hpp"

namespace scbc {

// Confidence complement for the empirical second-moment approximation:
//   beta2bar = 2/(N eps^2) ((Tr Gamma_Sigma)^2 + lambda_max(Gamma_Sigma) Tr Gamma_mu)
double confidence_beta2bar(int realizations, double epsilon, const Eigen::MatrixXd& gamma_sigma,
                           const Eigen::MatrixXd& gamma_mu);

// Smallest N achieving the target beta2bar at deviation threshold epsilon.
long min_samples(double beta2bar_target, double epsilon, const Eigen::MatrixXd& gamma_sigma,
                 const Eigen::MatrixXd& gamma_mu);

// Solves the confidence formula for epsilon given N and a beta2bar target.
double epsilon_for_confidence(int realizations, double beta2bar_target,
                              const Eigen::MatrixXd& gamma_sigma, const Eigen::MatrixXd& gamma_mu);

struct ConfidenceSetup {
  double epsilon = 0.0;
  int realizations = 0;
  Eigen::MatrixXd gamma_mu, gamma_sigma;
  double beta2bar = 0.0;
  bool vacuous = false;  // beta2bar >= 1

  static ConfidenceSetup make(int realizations, double epsilon, const Eigen::MatrixXd& gamma_sigma,
                              const Eigen::MatrixXd& gamma_mu);
};

enum class ConformityMode { Stochastic, Robust };

// One data-conformity block R^DC_j:
//   [ (1/N) sum Xi Xi^T - C      -(1/N) sum Xi H^T ]
//   [ *                           (1/N) sum H H^T  ]
// with C = Gamma_Sigma + Gamma_mu + eps I (stochastic) or varkappa^2 I (robust).
struct ConformityBlock {
  int step = 0;  // j, 1-based
  ConformityMode mode = ConformityMode::Stochastic;
  int state_dim = 0;    // n
  int lifted_dim = 0;   // l + q
  Eigen::MatrixXd matrix;
};

std::vector<ConformityBlock> dc_blocks(const LiftedData& lifted,
                                       const std::vector<Eigen::MatrixXd>& xplus,
                                       const ConfidenceSetup& setup);

std::vector<ConformityBlock> dc_blocks_robust(const LiftedData& lifted,
                                              const std::vector<Eigen::MatrixXd>& xplus,
                                              double varkappa);

struct DcCheck {
  bool satisfied = false;
  double max_eigenvalue = 0.0;
};

// Evaluates [I Phi] R [I; Phi^T] and tests negative semidefiniteness at
// tolerance 1e-9 relative to the block scale.
DcCheck check_dc(const Eigen::MatrixXd& phi, const ConformityBlock& block);

// One CSV per block plus a manifest recording mode and parameters.
void export_blocks_csv(const std::vector<ConformityBlock>& blocks, const ConfidenceSetup* setup,
                       double varkappa, const std::filesystem::path& dir);

}  // namespace scbc
