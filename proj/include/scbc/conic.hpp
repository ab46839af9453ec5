#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace scbc {

// Cone: product of dense PSD blocks and a nonnegative orthant. Symmetric
// blocks are stored as scaled upper triangles (svec: off-diagonals times
// sqrt(2)) so that inner products of storage vectors equal trace inner
// products of the matrices.
struct ConeLayout {
  std::vector<int> psd_sizes;
  int orthant = 0;

  int scalar_size() const;
  int barrier_degree() const;  // sum of block orders plus orthant length
  int psd_offset(size_t block) const;
  int orthant_offset() const;
};

int svec_size(int d);
int svec_index(int d, int r, int c);  // r <= c
void svec_to_mat(const Eigen::VectorXd& v, int offset, Eigen::MatrixXd& out);
void mat_to_svec(const Eigen::MatrixXd& m, Eigen::VectorXd& v, int offset);

// Standard form: minimize c^T x subject to A x = b, x in K.
struct ConicProgram {
  ConeLayout cones;
  int rows = 0;
  std::vector<int> a_row, a_col;
  std::vector<double> a_val;
  Eigen::VectorXd b, c;

  void add_entry(int r, int col, double v);
  void validate() const;

  // Sparse text format (see README): losslessly round-trips.
  void write_text(std::ostream& os) const;
  static ConicProgram read_text(std::istream& is);
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, Stalled };

std::string to_string(SolveStatus s);

struct ConicSolution {
  SolveStatus status = SolveStatus::Stalled;
  Eigen::VectorXd x, y, s;  // raw homogeneous-embedding point
  double tau = 0.0, kappa = 0.0;
  int iterations = 0;
  double primal_residual = 0.0, dual_residual = 0.0, relative_gap = 0.0;
  double primal_objective = 0.0, dual_objective = 0.0;
  uint64_t iterate_hash = 0;  // FNV over all iterates; determinism checks
  std::string message;

  Eigen::VectorXd primal() const { return x / tau; }
  Eigen::VectorXd dual() const { return y / tau; }
  Eigen::VectorXd slack() const { return s / tau; }
};

struct SolveOptions {
  double tolerance = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.99;
};

// Homogeneous self-dual embedding, Nesterov-Todd scaling, Mehrotra
// predictor-corrector, dense normal equations with one refinement pass.
// Deterministic: identical inputs give identical iterates.
ConicSolution solve(const ConicProgram& program, const SolveOptions& options = {});

struct ResidualReport {
  double equality_residual = 0.0;   // ||A x - b|| on the normalized primal
  double dual_residual = 0.0;       // ||A^T y + s - c||
  double duality_gap = 0.0;         // |c^T x - b^T y|
  std::vector<double> psd_min_eigenvalues;
  double orthant_min = 0.0;
  bool within(double tol) const;
};

// Recomputes all residuals from scratch (independent summation order).
ResidualReport certify(const ConicProgram& program, const ConicSolution& solution);

// Solution dump, one CSV per cone block.
void write_solution_csv(const ConicProgram& program, const ConicSolution& solution,
                        const std::string& dir);

}  // namespace scbc
