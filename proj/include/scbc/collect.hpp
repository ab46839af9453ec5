#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "scbc/system.hpp"

namespace scbc {

// One finite-horizon experiment: N noise realizations from the same initial
// state under the same input sequence. The recorded noise is oracle-only.
class TrajectoryBatch {
 public:
  TrajectoryBatch() = default;
  TrajectoryBatch(Eigen::VectorXd x0, Eigen::MatrixXd inputs, std::vector<Eigen::MatrixXd> xplus,
                  std::vector<Eigen::MatrixXd> xpast, std::vector<Eigen::MatrixXd> noise,
                  uint64_t seed);

  int realizations() const { return static_cast<int>(xplus_.size()); }  // N
  int horizon() const { return static_cast<int>(inputs_.cols()); }      // T
  int state_dim() const { return static_cast<int>(x0_.size()); }
  int input_dim() const { return static_cast<int>(inputs_.rows()); }
  uint64_t seed() const { return seed_; }

  const Eigen::VectorXd& x0() const { return x0_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const std::vector<Eigen::MatrixXd>& xplus() const { return xplus_; }
  const std::vector<Eigen::MatrixXd>& xpast() const { return xpast_; }

  // Audited: test oracles only, never the synthesis path.
  const std::vector<Eigen::MatrixXd>& recorded_noise_oracle() const;

  // FNV hash over the public payload, for provenance lines.
  std::string content_hash() const;

 private:
  Eigen::VectorXd x0_;
  Eigen::MatrixXd inputs_;                // m x T
  std::vector<Eigen::MatrixXd> xplus_;    // each n x T
  std::vector<Eigen::MatrixXd> xpast_;    // each n x T
  std::vector<Eigen::MatrixXd> noise_;    // each n x T, oracle-only
  uint64_t seed_ = 0;
};

// Runs N realizations. Realization i draws its noise from stream.sub("traj").at(i).
TrajectoryBatch run_experiment(const SystemModel& model, const Eigen::VectorXd& x0,
                               const Eigen::MatrixXd& inputs, int realizations, SeedStream stream);

// Inputs drawn i.i.d. uniform over the model's input box from stream.sub("input").
Eigen::MatrixXd draw_input_sequence(const SystemModel& model, int horizon, SeedStream stream);

// Lifted data: F^i = F(xpast columns), G^i columns G(x)u, H^i = [F^i; G^i].
struct LiftedData {
  int l = 0, q = 0;
  std::vector<Eigen::MatrixXd> F;  // l x T
  std::vector<Eigen::MatrixXd> G;  // q x T
  std::vector<Eigen::MatrixXd> H;  // (l+q) x T

  int realizations() const { return static_cast<int>(H.size()); }
  int horizon() const { return H.empty() ? 0 : static_cast<int>(H[0].cols()); }
};

LiftedData lift(const TrajectoryBatch& batch, const MonomialBasis& f_basis, const PolyMatrix& g_poly);

// Numerical ranks of the per-step second-moment matrices (1/N) sum_i H_j^i H_j^i^T
// and of the horizontally stacked blocks, at relative tolerance 1e-8.
struct ExcitationReport {
  std::vector<int> per_step_rank;
  int stacked_rank = 0;
  int full_rank = 0;  // l + q
  bool stacked_full() const { return stacked_rank == full_rank; }
};

ExcitationReport excitation_rank(const LiftedData& lifted);

// Directory archive: manifest.json, inputs.csv, one CSV per realization.
void save_batch(const TrajectoryBatch& batch, const std::filesystem::path& dir);
TrajectoryBatch load_batch(const std::filesystem::path& dir);

}  // namespace scbc
