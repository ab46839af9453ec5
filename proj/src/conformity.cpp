#include "scbc/conformity.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace scbc {

namespace {

double bound_term(const Eigen::MatrixXd& gamma_sigma, const Eigen::MatrixXd& gamma_mu) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma_sigma);
  const double lam_max = es.eigenvalues().maxCoeff();
  const double tr = gamma_sigma.trace();
  return tr * tr + lam_max * gamma_mu.trace();
}

// Shared assembly; `correction` is the matrix subtracted from the top-left block.
std::vector<ConformityBlock> assemble_blocks(const LiftedData& lifted,
                                             const std::vector<Eigen::MatrixXd>& xplus,
                                             const Eigen::MatrixXd& correction,
                                             ConformityMode mode) {
  if (lifted.H.empty() || xplus.empty()) throw std::invalid_argument("dc_blocks: empty batch");
  if (static_cast<int>(xplus.size()) != lifted.realizations())
    throw std::invalid_argument("dc_blocks: realization count mismatch");
  const int n = static_cast<int>(xplus[0].rows());
  const int lq = lifted.l + lifted.q;
  const int horizon = lifted.horizon();
  const double n_inv = 1.0 / lifted.realizations();
  std::vector<ConformityBlock> out;
  out.reserve(horizon);
  for (int j = 0; j < horizon; ++j) {
    Eigen::MatrixXd sxx = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sxh = Eigen::MatrixXd::Zero(n, lq);
    Eigen::MatrixXd shh = Eigen::MatrixXd::Zero(lq, lq);
    // fixed accumulation order: realization index, then time
    for (int i = 0; i < lifted.realizations(); ++i) {
      const auto xi = xplus[i].col(j);
      const auto hi = lifted.H[i].col(j);
      sxx.noalias() += n_inv * xi * xi.transpose();
      sxh.noalias() += n_inv * xi * hi.transpose();
      shh.noalias() += n_inv * hi * hi.transpose();
    }
    ConformityBlock block;
    block.step = j + 1;
    block.mode = mode;
    block.state_dim = n;
    block.lifted_dim = lq;
    block.matrix.resize(n + lq, n + lq);
    block.matrix.topLeftCorner(n, n) = sxx - correction;
    block.matrix.topRightCorner(n, lq) = -sxh;
    block.matrix.bottomLeftCorner(lq, n) = -sxh.transpose();
    block.matrix.bottomRightCorner(lq, lq) = shh;
    block.matrix = 0.5 * (block.matrix + block.matrix.transpose()).eval();
    out.push_back(std::move(block));
  }
  return out;
}

}  // namespace

double confidence_beta2bar(int realizations, double epsilon, const Eigen::MatrixXd& gamma_sigma,
                           const Eigen::MatrixXd& gamma_mu) {
  if (realizations < 1) throw std::invalid_argument("confidence_beta2bar: N must be >= 1");
  if (epsilon <= 0.0) throw std::invalid_argument("confidence_beta2bar: epsilon must be positive");
  return 2.0 / (realizations * epsilon * epsilon) * bound_term(gamma_sigma, gamma_mu);
}

long min_samples(double beta2bar_target, double epsilon, const Eigen::MatrixXd& gamma_sigma,
                 const Eigen::MatrixXd& gamma_mu) {
  if (beta2bar_target <= 0.0 || epsilon <= 0.0)
    throw std::invalid_argument("min_samples: targets must be positive");
  const double raw = 2.0 / (beta2bar_target * epsilon * epsilon) * bound_term(gamma_sigma, gamma_mu);
  return std::max(1L, static_cast<long>(std::ceil(raw - 1e-12)));
}

double epsilon_for_confidence(int realizations, double beta2bar_target,
                              const Eigen::MatrixXd& gamma_sigma, const Eigen::MatrixXd& gamma_mu) {
  if (realizations < 1 || beta2bar_target <= 0.0)
    throw std::invalid_argument("epsilon_for_confidence: invalid arguments");
  return std::sqrt(2.0 * bound_term(gamma_sigma, gamma_mu) / (realizations * beta2bar_target));
}

ConfidenceSetup ConfidenceSetup::make(int realizations, double epsilon,
                                      const Eigen::MatrixXd& gamma_sigma,
                                      const Eigen::MatrixXd& gamma_mu) {
  ConfidenceSetup s;
  s.epsilon = epsilon;
  s.realizations = realizations;
  s.gamma_mu = gamma_mu;
  s.gamma_sigma = gamma_sigma;
  s.beta2bar = confidence_beta2bar(realizations, epsilon, gamma_sigma, gamma_mu);
  s.vacuous = s.beta2bar >= 1.0;
  return s;
}

std::vector<ConformityBlock> dc_blocks(const LiftedData& lifted,
                                       const std::vector<Eigen::MatrixXd>& xplus,
                                       const ConfidenceSetup& setup) {
  if (setup.realizations != lifted.realizations())
    throw std::invalid_argument("dc_blocks: setup N differs from batch N");
  const int n = static_cast<int>(setup.gamma_sigma.rows());
  Eigen::MatrixXd correction =
      setup.gamma_sigma + setup.gamma_mu + setup.epsilon * Eigen::MatrixXd::Identity(n, n);
  return assemble_blocks(lifted, xplus, correction, ConformityMode::Stochastic);
}

std::vector<ConformityBlock> dc_blocks_robust(const LiftedData& lifted,
                                              const std::vector<Eigen::MatrixXd>& xplus,
                                              double varkappa) {
  if (varkappa <= 0.0) throw std::invalid_argument("dc_blocks_robust: varkappa must be positive");
  if (xplus.empty()) throw std::invalid_argument("dc_blocks_robust: empty batch");
  const int n = static_cast<int>(xplus[0].rows());
  Eigen::MatrixXd correction = varkappa * varkappa * Eigen::MatrixXd::Identity(n, n);
  return assemble_blocks(lifted, xplus, correction, ConformityMode::Robust);
}

DcCheck check_dc(const Eigen::MatrixXd& phi, const ConformityBlock& block) {
  const int n = block.state_dim;
  const int lq = block.lifted_dim;
  if (phi.rows() != n || phi.cols() != lq) throw std::invalid_argument("check_dc: Phi shape");
  Eigen::MatrixXd ext(n, n + lq);
  ext << Eigen::MatrixXd::Identity(n, n), phi;
  Eigen::MatrixXd q = ext * block.matrix * ext.transpose();
  q = 0.5 * (q + q.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  DcCheck r;
  r.max_eigenvalue = es.eigenvalues().maxCoeff();
  const double scale = std::max(1.0, block.matrix.cwiseAbs().maxCoeff());
  r.satisfied = r.max_eigenvalue <= 1e-9 * scale;
  return r;
}

void export_blocks_csv(const std::vector<ConformityBlock>& blocks, const ConfidenceSetup* setup,
                       double varkappa, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["blocks"] = blocks.size();
  manifest["mode"] = blocks.empty() || blocks[0].mode == ConformityMode::Stochastic
                         ? "stochastic"
                         : "robust";
  if (setup) {
    manifest["epsilon"] = setup->epsilon;
    manifest["beta2bar"] = setup->beta2bar;
    manifest["realizations"] = setup->realizations;
  } else {
    manifest["varkappa"] = varkappa;
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  for (const auto& block : blocks) {
    char name[32];
    std::snprintf(name, sizeof(name), "rdc_%03d.csv", block.step);
    std::ofstream os(dir / name);
    for (int r = 0; r < block.matrix.rows(); ++r) {
      for (int c = 0; c < block.matrix.cols(); ++c) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", block.matrix(r, c));
        os << (c ? "," : "") << buf;
      }
      os << '\n';
    }
  }
}

}  // namespace scbc
