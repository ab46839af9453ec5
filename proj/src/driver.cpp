#include "scbc/driver.hpp"

#include <stdexcept>

namespace scbc {

namespace {

// Equilibrates the lifted coordinates: h' = D^{-1} h with D from the row RMS
// of the data. A congruence shared by every conformity block and the target,
// so the certified statement is unchanged: J' = D_F^{-1} J, G' = D_G^{-1} G,
// Phi' = Phi D, while Pbar, Kbar and eta stay in original coordinates.
Eigen::VectorXd lifted_row_scales(const std::vector<LiftedData>& lifted) {
  const int rows = lifted[0].l + lifted[0].q;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(rows);
  long count = 0;
  for (const auto& basis_data : lifted)
    for (const auto& h : basis_data.H) {
      acc += h.rowwise().squaredNorm();
      count += h.cols();
    }
  Eigen::VectorXd d = (acc / std::max(1L, count)).cwiseSqrt();
  const double top = std::max(d.maxCoeff(), 1e-12);
  for (int r = 0; r < rows; ++r) d[r] = std::max(d[r], 1e-6 * top);
  return d;
}

LiftedData scale_lifted(const LiftedData& lifted, const Eigen::VectorXd& d) {
  LiftedData out;
  out.l = lifted.l;
  out.q = lifted.q;
  Eigen::VectorXd inv = d.cwiseInverse();
  for (size_t i = 0; i < lifted.H.size(); ++i) {
    out.F.push_back(inv.head(lifted.l).asDiagonal() * lifted.F[i]);
    out.G.push_back(inv.tail(lifted.q).asDiagonal() * lifted.G[i]);
    out.H.push_back(inv.asDiagonal() * lifted.H[i]);
  }
  return out;
}

}  // namespace

SynthesisOutcome synthesize(const TrajectoryBatch& batch, const MonomialBasis& f_basis,
                            const PolyMatrix& g_poly, const RegionSpec& regions,
                            const Eigen::MatrixXd& gamma_mu, const Eigen::MatrixXd& gamma_sigma,
                            const SynthesisOptions& options) {
  return synthesize(std::vector<const TrajectoryBatch*>{&batch}, f_basis, g_poly, regions,
                    gamma_mu, gamma_sigma, options);
}

SynthesisOutcome synthesize(const std::vector<const TrajectoryBatch*>& batches,
                            const MonomialBasis& f_basis, const PolyMatrix& g_poly,
                            const RegionSpec& regions, const Eigen::MatrixXd& gamma_mu,
                            const Eigen::MatrixXd& gamma_sigma, const SynthesisOptions& options) {
  if (batches.empty()) throw std::invalid_argument("synthesize: no batches");
  if (options.kappas.empty() || options.rhos.empty())
    throw std::invalid_argument("synthesize: empty kappa or rho grid");
  const int realizations = batches[0]->realizations();
  for (const auto* b : batches)
    if (b->realizations() != realizations)
      throw std::invalid_argument("synthesize: batches must share the realization count");

  SynthesisOutcome out;
  std::vector<LiftedData> raw;
  raw.reserve(batches.size());
  int total_blocks = 0;
  for (const auto* b : batches) {
    raw.push_back(lift(*b, f_basis, g_poly));
    total_blocks += b->horizon();
  }
  {
    // pooled excitation: combine per-batch reports
    ExcitationReport pooled;
    pooled.full_rank = raw[0].l + raw[0].q;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(pooled.full_rank, pooled.full_rank);
    for (const auto& basis_data : raw) {
      ExcitationReport r = excitation_rank(basis_data);
      pooled.per_step_rank.insert(pooled.per_step_rank.end(), r.per_step_rank.begin(),
                                  r.per_step_rank.end());
      for (const auto& h : basis_data.H) total += h * h.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(total);
    const auto& sv = svd.singularValues();
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-8 * sv[0]) ++pooled.stacked_rank;
    out.excitation = pooled;
  }
  const Eigen::VectorXd row_scales = lifted_row_scales(raw);

  // state-side congruence from the pooled next-state energy
  const int n = batches[0]->state_dim();
  Eigen::VectorXd state_rms = Eigen::VectorXd::Zero(n);
  {
    long count = 0;
    for (const auto* b : batches)
      for (const auto& xp : b->xplus()) {
        state_rms += xp.rowwise().squaredNorm();
        count += xp.cols();
      }
    state_rms = (state_rms / std::max(1L, count)).cwiseSqrt();
    const double top = std::max(state_rms.maxCoeff(), 1e-12);
    for (int r = 0; r < n; ++r) state_rms[r] = std::max(state_rms[r], 1e-6 * top);
  }
  const Eigen::VectorXd state_inv = state_rms.cwiseInverse();

  double epsilon;
  if (options.epsilon) {
    epsilon = *options.epsilon;
  } else {
    const double target =
        options.beta2bar_target > 0.0 ? options.beta2bar_target : 0.01 / total_blocks;
    epsilon = epsilon_for_confidence(realizations, target, gamma_sigma, gamma_mu);
  }
  out.epsilon_used = epsilon;
  out.setup = ConfidenceSetup::make(realizations, epsilon, gamma_sigma, gamma_mu);

  // conformity blocks in the scaled coordinates; the correction matrix carries
  // the same congruence: S (Gamma_Sigma + Gamma_mu + eps I) S
  ConfidenceSetup setup_scaled = out.setup;
  setup_scaled.epsilon = 0.0;
  setup_scaled.gamma_sigma =
      state_inv.asDiagonal() *
      (gamma_sigma + gamma_mu + epsilon * Eigen::MatrixXd::Identity(n, n)) *
      state_inv.asDiagonal();
  setup_scaled.gamma_mu = Eigen::MatrixXd::Zero(n, n);

  std::vector<ConformityBlock> blocks;
  double beta2bar = 0.0;
  bool vacuous = false;
  for (size_t bi = 0; bi < batches.size(); ++bi) {
    LiftedData scaled = scale_lifted(raw[bi], row_scales);
    std::vector<Eigen::MatrixXd> xplus_scaled;
    xplus_scaled.reserve(batches[bi]->xplus().size());
    for (const auto& xp : batches[bi]->xplus())
      xplus_scaled.push_back(state_inv.asDiagonal() * xp);
    std::vector<ConformityBlock> part;
    if (options.mode == ConformityMode::Stochastic) {
      part = dc_blocks(scaled, xplus_scaled, setup_scaled);
    } else {
      // worst-case analysis: the conformity bound holds surely for bounded
      // noise; the scaled correction is S (varkappa^2 I) S
      ConfidenceSetup robust_scaled = setup_scaled;
      robust_scaled.gamma_sigma = options.varkappa * options.varkappa *
                                  Eigen::MatrixXd(state_inv.asDiagonal()) *
                                  state_inv.asDiagonal();
      part = dc_blocks(scaled, xplus_scaled, robust_scaled);
      for (auto& blk : part) blk.mode = ConformityMode::Robust;
    }
    blocks.insert(blocks.end(), part.begin(), part.end());
  }
  if (options.mode == ConformityMode::Stochastic) {
    beta2bar = out.setup.beta2bar;
    vacuous = out.setup.vacuous;
  }

  Eigen::MatrixXd df_inv =
      row_scales.head(raw[0].l).cwiseInverse().asDiagonal().toDenseMatrix();
  Eigen::MatrixXd dg_inv =
      row_scales.tail(raw[0].q).cwiseInverse().asDiagonal().toDenseMatrix();
  Eigen::MatrixXd state_scale_mat = state_rms.asDiagonal();
  PolyMatrix j_poly = factorize_dictionary(f_basis).left_mul(df_inv).right_mul(state_scale_mat);
  PolyMatrix g_scaled = g_poly.left_mul(dg_inv);

  // regions seen by the assembler: vertex LMIs act on scaled states, the box
  // multipliers act on the symbolic x and stay in original coordinates
  RegionSpec regions_scaled = regions;
  regions_scaled.initial_box =
      Box(state_inv.asDiagonal() * regions.initial_box.lo,
          state_inv.asDiagonal() * regions.initial_box.hi);
  if (regions.z_eta) regions_scaled.z_eta = state_inv.asDiagonal() * (*regions.z_eta);
  if (regions.z_delta) regions_scaled.z_delta = state_inv.asDiagonal() * (*regions.z_delta);

  std::string pooled_hash;
  for (const auto* b : batches) {
    if (!pooled_hash.empty()) pooled_hash += "+";
    pooled_hash += b->content_hash();
  }

  for (double kappa : options.kappas) {
    for (double rho : options.rhos) {
      GridEntry entry;
      entry.kappa = kappa;
      entry.rho = rho;
      try {
        SdpProblem problem = assemble_program(blocks, j_poly, g_scaled, regions_scaled, kappa, rho,
                                              options.degrees, options.floors, options.assemble);
        ConicSolution solution = solve(problem.program, options.solver);
        entry.status = solution.status;
        if (solution.status == SolveStatus::Optimal) {
          Certificate cert = recover_certificate(problem, solution, regions, gamma_mu, gamma_sigma,
                                                 options.safety_horizon, beta2bar, vacuous,
                                                 options.mode, pooled_hash, state_inv);
          if (cert.ok()) {
            entry.beta1 = cert.beta1;
            if (!out.best || cert.beta1 < out.best->beta1) out.best = std::move(cert);
          } else {
            entry.note = cert.status;
          }
        } else {
          entry.note = solution.message;
        }
      } catch (const std::exception& e) {
        entry.note = e.what();
      }
      out.grid.push_back(std::move(entry));
    }
  }
  return out;
}

}  // namespace scbc
