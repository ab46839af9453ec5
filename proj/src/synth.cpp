#include "scbc/synth.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace scbc {

double level_eta(const Eigen::MatrixXd& p, const Box& initial_box) {
  if (initial_box.dim() != p.rows()) throw std::invalid_argument("level_eta: dimension mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : initial_box.vertices()) best = std::max(best, v.dot(p * v));
  return best;
}

namespace {

double box_min_quadratic(const Eigen::MatrixXd& p, const Box& box) {
  const int n = box.dim();
  std::vector<int> pattern(n, 0);  // 0 = lo, 1 = hi, 2 = free
  double best = std::numeric_limits<double>::infinity();
  const long total = static_cast<long>(std::pow(3.0, n) + 0.5);
  for (long code = 0; code < total; ++code) {
    long rem = code;
    std::vector<int> fixed, free_idx;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      pattern[i] = rem % 3;
      rem /= 3;
      if (pattern[i] == 0) x[i] = box.lo[i];
      else if (pattern[i] == 1) x[i] = box.hi[i];
      else free_idx.push_back(i);
    }
    if (!free_idx.empty()) {
      const int f = static_cast<int>(free_idx.size());
      Eigen::MatrixXd pff(f, f);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f);
      for (int a = 0; a < f; ++a) {
        for (int b = 0; b < f; ++b) pff(a, b) = p(free_idx[a], free_idx[b]);
        for (int i = 0; i < n; ++i)
          if (pattern[i] != 2) rhs[a] -= p(free_idx[a], i) * x[i];
      }
      Eigen::VectorXd xf = pff.ldlt().solve(rhs);
      bool inside = true;
      for (int a = 0; a < f; ++a) {
        const int i = free_idx[a];
        if (xf[a] < box.lo[i] - 1e-12 || xf[a] > box.hi[i] + 1e-12) {
          inside = false;
          break;
        }
        x[i] = std::min(std::max(xf[a], box.lo[i]), box.hi[i]);
      }
      if (!inside) continue;  // stationary point outside the face
    }
    best = std::min(best, x.dot(p * x));
  }
  return best;
}

}  // namespace

double level_delta(const Eigen::MatrixXd& p, const std::vector<Box>& unsafe_boxes) {
  if (unsafe_boxes.empty()) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& box : unsafe_boxes) {
    if (box.dim() != p.rows()) throw std::invalid_argument("level_delta: dimension mismatch");
    if (box.dim() > 8) throw std::invalid_argument("level_delta: dimension too large for face enumeration");
    best = std::min(best, box_min_quadratic(p, box));
  }
  return best;
}

double psi_offset(const Eigen::MatrixXd& p, const Eigen::MatrixXd& gamma_mu,
                  const Eigen::MatrixXd& gamma_sigma, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("psi_offset: rho must be positive");
  return (1.0 + 1.0 / rho) * (p * gamma_mu).trace() + (p * gamma_sigma).trace();
}

namespace {
double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }
}  // namespace

double beta1_theorem(double eta, double delta, double psi, double kappa, int horizon) {
  if (!(eta > 0.0 && delta > eta)) throw std::invalid_argument("beta1: need 0 < eta < delta");
  if (psi < 0.0) throw std::invalid_argument("beta1: psi must be nonnegative");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("beta1: kappa must lie in (0,1)");
  if (horizon < 1) throw std::invalid_argument("beta1: horizon must be >= 1");
  if (delta >= psi / (1.0 - kappa)) {
    return clamp01(1.0 - (1.0 - eta / delta) * std::pow(1.0 - psi / delta, horizon));
  }
  return clamp01(eta / delta * std::pow(kappa, horizon) +
                 psi / ((1.0 - kappa) * delta) * (1.0 - std::pow(kappa, horizon)));
}

double beta1_relaxed(double eta, double delta, double psi, int horizon) {
  if (!(eta > 0.0 && delta > eta)) throw std::invalid_argument("beta1_relaxed: need 0 < eta < delta");
  if (psi < 0.0 || horizon < 1) throw std::invalid_argument("beta1_relaxed: bad arguments");
  return clamp01((eta + psi * horizon) / delta);
}

double beta1_infinite(double eta, double delta, double psi_context) {
  if (psi_context != 0.0)
    throw std::invalid_argument("beta1_infinite: requires a certificate with psi == 0");
  if (!(eta > 0.0 && delta > eta)) throw std::invalid_argument("beta1_infinite: need 0 < eta < delta");
  return clamp01(eta / delta);
}

std::string Certificate::guarantee_line() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "P{ P{safe over %d steps} >= %.6g } >= %.6g", horizon,
                1.0 - beta1, 1.0 - beta2);
  std::string line(buf);
  if (vacuous_confidence) line += "  [confidence vacuous: beta2 >= 1, guarantee uninformative]";
  return line;
}

Certificate recover_certificate(const SdpProblem& problem, const ConicSolution& solution,
                                const RegionSpec& regions, const Eigen::MatrixXd& gamma_mu,
                                const Eigen::MatrixXd& gamma_sigma, int safety_horizon,
                                double beta2bar, bool beta2bar_vacuous, ConformityMode mode,
                                const std::string& batch_hash,
                                const Eigen::VectorXd& state_scale) {
  if (solution.status != SolveStatus::Optimal)
    throw std::invalid_argument("recover_certificate: solution is not optimal");
  const CompileInfo& info = problem.info;
  Eigen::MatrixXd pbar = info.pbar(problem.program, solution);
  pbar = 0.5 * (pbar + pbar.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pbar);
  const double lam_min = es.eigenvalues().minCoeff();
  const double lam_max = es.eigenvalues().maxCoeff();
  if (lam_min <= 0.0 || lam_max / lam_min > 1e12)
    throw std::invalid_argument("recover_certificate: Pbar singular or condition number above 1e12");
  Eigen::MatrixXd pbar_inv = es.eigenvectors() *
                             es.eigenvalues().cwiseInverse().asDiagonal() *
                             es.eigenvectors().transpose();
  pbar_inv = 0.5 * (pbar_inv + pbar_inv.transpose()).eval();

  // undo the state congruence: Pbar_solver = S Pbar S, Kbar_solver = K Pbar S
  Eigen::MatrixXd scale = state_scale.size() > 0
                              ? Eigen::MatrixXd(state_scale.asDiagonal())
                              : Eigen::MatrixXd::Identity(info.n, info.n);
  Eigen::MatrixXd p = scale * pbar_inv * scale;
  p = 0.5 * (p + p.transpose()).eval();

  Certificate cert;
  cert.p = p;
  cert.controller =
      Controller{info.kbar(problem.program, solution).right_mul(pbar_inv * scale)};
  cert.kappa = info.kappa;
  cert.rho = info.rho;
  cert.horizon = safety_horizon;
  cert.mode = mode;
  cert.batch_hash = batch_hash;
  cert.solver_primal_residual = solution.primal_residual;
  cert.solver_dual_residual = solution.dual_residual;
  cert.solver_gap = solution.relative_gap;
  cert.eta = level_eta(p, regions.initial_box);
  cert.delta = level_delta(p, regions.unsafe_boxes);
  cert.psi = psi_offset(p, gamma_mu, gamma_sigma, info.rho);
  cert.beta2bar = beta2bar;
  cert.beta2 = std::min(1.0, info.horizon * beta2bar);  // union bound over the T data steps
  cert.vacuous_confidence = beta2bar_vacuous || info.horizon * beta2bar >= 1.0;

  if (!(cert.eta < cert.delta) || !(cert.eta > 0.0) || !std::isfinite(cert.delta)) {
    cert.status = "levels-violated";
    cert.beta1 = 1.0;
    return cert;
  }

  // report the tighter of the applicable bounds
  const double relaxed = beta1_relaxed(cert.eta, cert.delta, cert.psi, safety_horizon);
  if (info.kappa < 1.0) {
    const double tight = beta1_theorem(cert.eta, cert.delta, cert.psi, info.kappa, safety_horizon);
    if (tight <= relaxed) {
      cert.beta1 = tight;
      cert.beta1_branch =
          cert.delta >= cert.psi / (1.0 - info.kappa) ? "theorem-1" : "theorem-2";
    } else {
      cert.beta1 = relaxed;
      cert.beta1_branch = "relaxed";
    }
  } else {
    cert.beta1 = relaxed;
    cert.beta1_branch = "relaxed";
  }
  cert.status = "ok";
  return cert;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

}  // namespace

std::string Certificate::to_json_string() const {
  nlohmann::json j;
  j["p"] = matrix_to_json(p);
  // controller as a coefficient table: monomial exponents + m x n blocks
  nlohmann::json table = nlohmann::json::array();
  const PolyMatrix& k = controller.kgain;
  std::vector<Monomial> monomials;
  for (int r = 0; r < k.rows(); ++r)
    for (int c = 0; c < k.cols(); ++c)
      for (const auto& [mono, coef] : k.at(r, c).terms()) {
        bool seen = false;
        for (const auto& m : monomials)
          if (m == mono) { seen = true; break; }
        if (!seen) monomials.push_back(mono);
      }
  std::sort(monomials.begin(), monomials.end(),
            [](const Monomial& a, const Monomial& b) { return monomial_less(a, b); });
  for (const auto& mono : monomials) {
    nlohmann::json entry;
    entry["exponents"] = mono.exponents;
    Eigen::MatrixXd block(k.rows(), k.cols());
    for (int r = 0; r < k.rows(); ++r)
      for (int c = 0; c < k.cols(); ++c) block(r, c) = k.at(r, c).coeff(mono);
    entry["coefficients"] = matrix_to_json(block);
    table.push_back(std::move(entry));
  }
  j["controller"] = table;
  j["controller_rows"] = k.rows();
  j["controller_cols"] = k.cols();
  j["eta"] = eta;
  j["delta"] = delta;
  j["psi"] = psi;
  j["kappa"] = kappa;
  j["rho"] = rho;
  j["horizon"] = horizon;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["beta2bar"] = beta2bar;
  j["beta1_branch"] = beta1_branch;
  j["mode"] = mode == ConformityMode::Stochastic ? "stochastic" : "robust";
  j["vacuous_confidence"] = vacuous_confidence;
  j["status"] = status;
  j["batch_hash"] = batch_hash;
  j["solver"] = {{"primal_residual", solver_primal_residual},
                 {"dual_residual", solver_dual_residual},
                 {"gap", solver_gap}};
  return j.dump(2);
}

Certificate Certificate::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Certificate c;
  c.p = matrix_from_json(j.at("p"));
  const int rows = j.at("controller_rows").get<int>();
  const int cols = j.at("controller_cols").get<int>();
  PolyMatrix k(rows, cols, static_cast<int>(c.p.rows()));
  for (const auto& entry : j.at("controller")) {
    Monomial mono(entry.at("exponents").get<std::vector<unsigned>>());
    Eigen::MatrixXd block = matrix_from_json(entry.at("coefficients"));
    for (int r = 0; r < rows; ++r)
      for (int col = 0; col < cols; ++col)
        if (block(r, col) != 0.0) k.at(r, col).add_term(mono, block(r, col));
  }
  c.controller = Controller{std::move(k)};
  c.eta = j.at("eta").get<double>();
  c.delta = j.at("delta").get<double>();
  c.psi = j.at("psi").get<double>();
  c.kappa = j.at("kappa").get<double>();
  c.rho = j.at("rho").get<double>();
  c.horizon = j.at("horizon").get<int>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.beta2bar = j.at("beta2bar").get<double>();
  c.beta1_branch = j.at("beta1_branch").get<std::string>();
  c.mode = j.at("mode").get<std::string>() == "robust" ? ConformityMode::Robust
                                                       : ConformityMode::Stochastic;
  c.vacuous_confidence = j.at("vacuous_confidence").get<bool>();
  c.status = j.at("status").get<std::string>();
  c.batch_hash = j.at("batch_hash").get<std::string>();
  c.solver_primal_residual = j.at("solver").at("primal_residual").get<double>();
  c.solver_dual_residual = j.at("solver").at("dual_residual").get<double>();
  c.solver_gap = j.at("solver").at("gap").get<double>();

  // structural invariants of a usable certificate
  if (c.status == "ok") {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.p);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("certificate file: P is not positive definite");
    if (!(c.eta < c.delta))
      throw std::invalid_argument("certificate file: eta >= delta violates the level ordering");
    if (c.beta1 < 0.0 || c.beta1 > 1.0 || c.beta2 < 0.0 || c.beta2 > 1.0)
      throw std::invalid_argument("certificate file: probabilities out of range");
  }
  return c;
}

}  // namespace scbc
