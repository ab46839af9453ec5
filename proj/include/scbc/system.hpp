#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <string>
#include <vector>

#include "scbc/noise.hpp"
#include "scbc/polynomial.hpp"
#include "scbc/regions.hpp"

namespace scbc {

// Counts reads of synthesis-forbidden data (true system matrices, recorded
// noise). Tests reset it, run the synthesis path, and assert it stayed zero.
namespace audit {
std::atomic<uint64_t>& oracle_counter();
void reset();
uint64_t reads();
}  // namespace audit

struct SimulationOverflow : std::runtime_error {
  explicit SimulationOverflow(const std::string& what) : std::runtime_error(what) {}
};

// Polynomial state feedback u = K(x) x.
struct Controller {
  PolyMatrix kgain;  // m x n

  Eigen::VectorXd control(const Eigen::VectorXd& x) const { return kgain.eval(x) * x; }
  static Controller zero(int m, int n) { return Controller{PolyMatrix(m, n, n)}; }
};

// Ground-truth model x+ = A F(x) + B G(x) u + noise. A and B are the unknown
// part: simulation uses them internally, but any external read goes through
// the audited oracle accessors.
class SystemModel {
 public:
  SystemModel(Eigen::MatrixXd a, Eigen::MatrixXd b, MonomialBasis f_basis, PolyMatrix g_poly,
              NoiseSpec noise, Box input_box);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int dict_size() const { return f_basis_.size(); }   // l
  int g_rows() const { return g_poly_.rows(); }       // q

  const MonomialBasis& f_basis() const { return f_basis_; }
  const PolyMatrix& g_poly() const { return g_poly_; }
  const NoiseSpec& noise() const { return noise_; }
  const Box& input_box() const { return input_box_; }

  // Audited accessors; the synthesis path must never call these.
  const Eigen::MatrixXd& system_matrix_oracle() const;
  const Eigen::MatrixXd& input_matrix_oracle() const;
  Eigen::MatrixXd phi_oracle() const;  // [A B]

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& noise) const;

  // Open-loop run; records the noise actually used (oracle data).
  struct OpenLoopRun {
    std::vector<Eigen::VectorXd> states;  // length T+1
    std::vector<Eigen::VectorXd> noise;   // length T
  };
  OpenLoopRun simulate_open(const Eigen::VectorXd& x0, const Eigen::MatrixXd& inputs,
                            SeedStream stream) const;

  struct ClosedLoopRun {
    std::vector<Eigen::VectorXd> states;
    bool entered_unsafe = false;
    int first_violation = -1;  // step index, -1 if none
  };
  ClosedLoopRun simulate_closed(const Controller& controller, const Eigen::VectorXd& x0,
                                int horizon, SeedStream stream,
                                const std::vector<Box>& unsafe) const;

  static constexpr double kOverflowLimit = 1e6;

 private:
  int n_, m_;
  Eigen::MatrixXd a_, b_;
  MonomialBasis f_basis_;
  PolyMatrix g_poly_;
  NoiseSpec noise_;
  Box input_box_;
};

struct BenchmarkOverrides {
  double tau = 0.01;
  Eigen::Vector3d inertias{20.0, 18.0, 15.0};  // spacecraft only
  double input_bound = 5.0;                    // symmetric input box half-width
};

struct Benchmark {
  std::string name;
  SystemModel model;
  RegionSpec regions;
};

// Appendix benchmarks: "lorenz", "chen", "spacecraft".
Benchmark benchmark(const std::string& name, const BenchmarkOverrides& overrides = {});

}  // namespace scbc
