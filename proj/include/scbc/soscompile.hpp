#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scbc/conformity.hpp"
#include "scbc/conic.hpp"
#include "scbc/polynomial.hpp"
#include "scbc/regions.hpp"

namespace scbc {

// Where the barrier-decrease matrix inequality is enforced. StateBox adds one
// constant PSD multiplier per axis against (hi - x_v)(x_v - lo) >= 0; Global
// drops them (kept for experiments; structurally infeasible for nonconstant
// closed-loop dictionaries, see the synthesis report).
enum class SosDomain { StateBox, Global };

struct SosDegrees {
  int k_degree = 1;        // degree of the entries of Kbar(x)
  int alpha_degree = 0;    // degree of the multipliers alpha_j(x); 0 = constants, else even
  int gram_half_degree = -1;  // -1: derived from the constraint degree
};

struct SosFloors {
  double pbar_min_eig = 1e-6;   // Pbar >= this * I
  double margin_scale = 1e-8;   // SOS margin t = margin_scale * data scale
  double trace_target = 1.0;    // Tr(Pbar) pinned to n * trace_target
};

struct AssembleOptions {
  SosDomain domain = SosDomain::StateBox;
  bool literal_levels = false;  // the rank-one level-set containments, verbatim
};

// Recovery map from cone coordinates back to the synthesis quantities.
struct CompileInfo {
  int n = 0, l = 0, q = 0, m = 0, horizon = 0, dilated = 0;  // dilated = 2n+l+q
  double kappa = 0.0, rho = 0.0, margin = 0.0;
  double lambda_min = 0.0, trace_target = 0.0;
  SosDegrees degrees;
  AssembleOptions options;
  MonomialBasis k_basis;      // monomials of the Kbar entries
  MonomialBasis gram_basis;   // x-half-basis of the Gram block
  MonomialBasis alpha_basis;  // alpha half-basis (alpha_degree >= 2 only)
  std::vector<Eigen::VectorXd> vertices;  // initial-box vertices (vertex mode)
  std::vector<double> block_scales;       // per-block normalization, folded into alpha_j

  // cone layout bookkeeping
  int pbar_block = -1;
  int gram_block = -1;
  std::vector<int> vertex_blocks;
  std::vector<int> box_mult_blocks;
  std::vector<int> alpha_blocks;  // gram mode
  int literal_eta_block = -1, literal_delta_block = -1;
  int eta_index = -1, delta_index = -1;      // orthant positions
  int alpha_scalar_base = -1;                // orthant, scalar mode
  int k_split_base = -1;                     // orthant, (plus,minus) pairs
  std::string warning;                       // literal-mode rank note etc.

  Eigen::MatrixXd pbar(const ConicProgram& p, const ConicSolution& s) const;
  PolyMatrix kbar(const ConicProgram& p, const ConicSolution& s) const;
  double eta_bar(const ConicProgram& p, const ConicSolution& s) const;
  std::vector<Polynomial> alphas(const ConicProgram& p, const ConicSolution& s) const;
};

struct SdpProblem {
  ConicProgram program;
  CompileInfo info;

  std::string to_json_string() const;
  static SdpProblem from_json_string(const std::string& text);
};

// Compiles the data-driven barrier conditions into one conic program:
// the dilated decrease inequality with S-lemma multipliers over the
// data-conformity blocks, scalarized as a Gram constraint in (x, y),
// the initial-set vertex LMIs, positivity floors, a trace normalization,
// and objective maximize eta_bar.
SdpProblem assemble_program(const std::vector<ConformityBlock>& dc,
                            const PolyMatrix& j_poly, const PolyMatrix& g_poly,
                            const RegionSpec& regions, double kappa, double rho,
                            const SosDegrees& degrees = {}, const SosFloors& floors = {},
                            const AssembleOptions& options = {});

struct SosCheckResult {
  bool is_sos = false;
  Eigen::MatrixXd gram;
  MonomialBasis basis;
  ConicSolution solution;
  double reconstruction_error = 0.0;  // max coefficient mismatch of m^T G m vs p
};

// Gram-matrix SOS feasibility for a scalar polynomial of even degree. The
// returned Gram is projected onto the coefficient equalities, so the
// reconstruction matches the input to machine precision.
SosCheckResult sos_check(const Polynomial& p, const SolveOptions& solver_options = {});

}  // namespace scbc
