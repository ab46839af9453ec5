#include "scbc/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace scbc {

int ConeLayout::scalar_size() const {
  int s = orthant;
  for (int d : psd_sizes) s += svec_size(d);
  return s;
}

int ConeLayout::barrier_degree() const {
  int s = orthant;
  for (int d : psd_sizes) s += d;
  return s;
}

int ConeLayout::psd_offset(size_t block) const {
  int off = 0;
  for (size_t k = 0; k < block; ++k) off += svec_size(psd_sizes[k]);
  return off;
}

int ConeLayout::orthant_offset() const { return psd_offset(psd_sizes.size()); }

int svec_size(int d) { return d * (d + 1) / 2; }

int svec_index(int d, int r, int c) {
  // upper triangle, row-major: (0,0),(0,1),...,(0,d-1),(1,1),...
  return r * d - r * (r - 1) / 2 + (c - r);
}

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2 = 0.7071067811865475;
}  // namespace

void svec_to_mat(const Eigen::VectorXd& v, int offset, Eigen::MatrixXd& out) {
  const int d = static_cast<int>(out.rows());
  int k = offset;
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c, ++k) {
      const double val = r == c ? v[k] : v[k] * kInvSqrt2;
      out(r, c) = val;
      out(c, r) = val;
    }
}

void mat_to_svec(const Eigen::MatrixXd& m, Eigen::VectorXd& v, int offset) {
  const int d = static_cast<int>(m.rows());
  int k = offset;
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c, ++k) v[k] = r == c ? m(r, c) : m(r, c) * kSqrt2;
}

void ConicProgram::add_entry(int r, int col, double v) {
  if (v == 0.0) return;
  a_row.push_back(r);
  a_col.push_back(col);
  a_val.push_back(v);
}

void ConicProgram::validate() const {
  const int n = cones.scalar_size();
  if (c.size() != n) throw std::invalid_argument("conic program: objective length mismatch");
  if (b.size() != rows) throw std::invalid_argument("conic program: rhs length mismatch");
  for (size_t k = 0; k < a_row.size(); ++k) {
    if (a_row[k] < 0 || a_row[k] >= rows || a_col[k] < 0 || a_col[k] >= n)
      throw std::invalid_argument("conic program: entry out of range");
    if (!std::isfinite(a_val[k])) throw std::invalid_argument("conic program: non-finite entry");
  }
  for (int d : cones.psd_sizes)
    if (d < 1) throw std::invalid_argument("conic program: empty PSD block");
  if (cones.orthant < 0) throw std::invalid_argument("conic program: negative orthant length");
}

void ConicProgram::write_text(std::ostream& os) const {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "conicv1\n";
  os << "psd " << cones.psd_sizes.size();
  for (int d : cones.psd_sizes) os << ' ' << d;
  os << "\northant " << cones.orthant << "\nrows " << rows << '\n';
  os << "c " << c.size() << '\n';
  for (int i = 0; i < c.size(); ++i)
    if (c[i] != 0.0) os << i << ' ' << num(c[i]) << '\n';
  os << "cend\n";
  os << "A " << a_row.size() << '\n';
  for (size_t k = 0; k < a_row.size(); ++k)
    os << a_row[k] << ' ' << a_col[k] << ' ' << num(a_val[k]) << '\n';
  os << "b " << b.size() << '\n';
  for (int i = 0; i < b.size(); ++i)
    if (b[i] != 0.0) os << i << ' ' << num(b[i]) << '\n';
  os << "end\n";
}

ConicProgram ConicProgram::read_text(std::istream& is) {
  ConicProgram p;
  std::string tok;
  is >> tok;
  if (tok != "conicv1") throw std::runtime_error("conic text: bad magic");
  is >> tok;
  if (tok != "psd") throw std::runtime_error("conic text: expected psd");
  size_t npsd;
  is >> npsd;
  p.cones.psd_sizes.resize(npsd);
  for (auto& d : p.cones.psd_sizes) is >> d;
  is >> tok >> p.cones.orthant;
  if (tok != "orthant") throw std::runtime_error("conic text: expected orthant");
  is >> tok >> p.rows;
  if (tok != "rows") throw std::runtime_error("conic text: expected rows");
  int clen;
  is >> tok >> clen;
  if (tok != "c") throw std::runtime_error("conic text: expected c");
  p.c = Eigen::VectorXd::Zero(clen);
  while (is >> tok && tok != "cend") {
    int idx = std::stoi(tok);
    double val;
    is >> val;
    p.c[idx] = val;
  }
  size_t nnz;
  is >> tok >> nnz;
  if (tok != "A") throw std::runtime_error("conic text: expected A");
  p.a_row.reserve(nnz);
  for (size_t k = 0; k < nnz; ++k) {
    int r, col;
    double v;
    is >> r >> col >> v;
    p.a_row.push_back(r);
    p.a_col.push_back(col);
    p.a_val.push_back(v);
  }
  int blen;
  is >> tok >> blen;
  if (tok != "b") throw std::runtime_error("conic text: expected b");
  p.b = Eigen::VectorXd::Zero(blen);
  while (is >> tok && tok != "end") {
    int idx = std::stoi(tok);
    double val;
    is >> val;
    p.b[idx] = val;
  }
  p.validate();
  return p;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Stalled: return "stalled";
  }
  return "?";
}

namespace {

// Nesterov-Todd scaling state for the product cone.
struct Scaling {
  std::vector<Eigen::MatrixXd> r, r_inv, w_hat;  // per PSD block; w_hat = R R^T
  std::vector<Eigen::VectorXd> lambda_psd;
  Eigen::VectorXd w_orth, lambda_orth;
  bool ok = true;
};

}  // namespace

namespace detail {

struct Work {
  const ConicProgram& p;
  const SolveOptions& opt;
  int n, m;
  Eigen::SparseMatrix<double> a;         // m x n
  Eigen::SparseMatrix<double> at;        // n x m
  Eigen::VectorXd x, y, s;
  double tau = 1.0, kappa = 1.0;
  Scaling sc;
  uint64_t hash = 0xcbf29ce484222325ull;

  explicit Work(const ConicProgram& prog, const SolveOptions& options)
      : p(prog), opt(options), n(prog.cones.scalar_size()), m(prog.rows) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(prog.a_val.size());
    for (size_t k = 0; k < prog.a_val.size(); ++k)
      trips.emplace_back(prog.a_row[k], prog.a_col[k], prog.a_val[k]);
    a.resize(m, n);
    a.setFromTriplets(trips.begin(), trips.end());
    at = a.transpose();
  }

  void hash_vec(const Eigen::VectorXd& v) {
    const unsigned char* ptr = reinterpret_cast<const unsigned char*>(v.data());
    for (size_t i = 0; i < sizeof(double) * v.size(); ++i) {
      hash ^= ptr[i];
      hash *= 0x100000001b3ull;
    }
  }

  Eigen::VectorXd identity_point() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      for (int r = 0; r < d; ++r) e[off + svec_index(d, r, r)] = 1.0;
    }
    e.segment(p.cones.orthant_offset(), p.cones.orthant).setOnes();
    return e;
  }

  bool strictly_interior() const {
    if (tau <= 0.0 || kappa <= 0.0) return false;
    const int oo = p.cones.orthant_offset();
    if (p.cones.orthant > 0 && (x.segment(oo, p.cones.orthant).minCoeff() <= 0.0 ||
                                s.segment(oo, p.cones.orthant).minCoeff() <= 0.0))
      return false;
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd xm(d, d), sm(d, d);
      svec_to_mat(x, off, xm);
      svec_to_mat(s, off, sm);
      if (Eigen::LLT<Eigen::MatrixXd>(xm).info() != Eigen::Success) return false;
      if (Eigen::LLT<Eigen::MatrixXd>(sm).info() != Eigen::Success) return false;
    }
    return true;
  }

  bool compute_scaling() {
    const auto& sizes = p.cones.psd_sizes;
    sc.r.resize(sizes.size());
    sc.r_inv.resize(sizes.size());
    sc.w_hat.resize(sizes.size());
    sc.lambda_psd.resize(sizes.size());
    for (size_t b = 0; b < sizes.size(); ++b) {
      const int d = sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd xm(d, d), sm(d, d);
      svec_to_mat(x, off, xm);
      svec_to_mat(s, off, sm);
      Eigen::LLT<Eigen::MatrixXd> lx(xm), ls(sm);
      if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
      Eigen::MatrixXd lxm = lx.matrixL();
      Eigen::MatrixXd lsm = ls.matrixL();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(lsm.transpose() * lxm,
                                            Eigen::ComputeFullU | Eigen::ComputeFullV);
      Eigen::VectorXd sig = svd.singularValues();
      if (sig.minCoeff() <= 0.0) return false;
      Eigen::VectorXd sig_isqrt = sig.cwiseSqrt().cwiseInverse();
      sc.r[b] = lxm * svd.matrixV() * sig_isqrt.asDiagonal();
      sc.r_inv[b] = sig_isqrt.asDiagonal() * svd.matrixU().transpose() * lsm.transpose();
      sc.w_hat[b] = sc.r[b] * sc.r[b].transpose();
      sc.lambda_psd[b] = sig;
    }
    const int oo = p.cones.orthant_offset();
    const int p_len = p.cones.orthant;
    auto xo = x.segment(oo, p_len);
    auto so = s.segment(oo, p_len);
    if (p_len > 0 && (xo.minCoeff() <= 0.0 || so.minCoeff() <= 0.0)) return false;
    sc.w_orth = (xo.array() / so.array()).sqrt().matrix();
    sc.lambda_orth = (xo.array() * so.array()).sqrt().matrix();
    return true;
  }

  // v -> W^T W v = What * mat(v) * What per block; orthant w^2 .* v
  Eigen::VectorXd apply_hinv(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd vm(d, d);
      svec_to_mat(v, off, vm);
      Eigen::MatrixXd res = sc.w_hat[b] * vm * sc.w_hat[b];
      res = 0.5 * (res + res.transpose()).eval();
      mat_to_svec(res, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) =
        (sc.w_orth.array().square() * v.segment(oo, p.cones.orthant).array()).matrix();
    return out;
  }

  // scaled x-direction: W^{-T} v = Rinv * mat(v) * Rinv^T; orthant v / w
  Eigen::VectorXd apply_w_invt(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd vm(d, d);
      svec_to_mat(v, off, vm);
      Eigen::MatrixXd res = sc.r_inv[b] * vm * sc.r_inv[b].transpose();
      res = 0.5 * (res + res.transpose()).eval();
      mat_to_svec(res, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) =
        (v.segment(oo, p.cones.orthant).array() / sc.w_orth.array()).matrix();
    return out;
  }

  // adjoint of W: u -> R mat(u) R^T; orthant w .* u
  Eigen::VectorXd apply_wt(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd vm(d, d);
      svec_to_mat(v, off, vm);
      Eigen::MatrixXd res = sc.r[b] * vm * sc.r[b].transpose();
      res = 0.5 * (res + res.transpose()).eval();
      mat_to_svec(res, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) =
        (sc.w_orth.array() * v.segment(oo, p.cones.orthant).array()).matrix();
    return out;
  }

  // scaled s-direction: W v = R^T mat(v) R; orthant w .* v
  Eigen::VectorXd apply_w(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd vm(d, d);
      svec_to_mat(v, off, vm);
      Eigen::MatrixXd res = sc.r[b].transpose() * vm * sc.r[b];
      res = 0.5 * (res + res.transpose()).eval();
      mat_to_svec(res, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) =
        (sc.w_orth.array() * v.segment(oo, p.cones.orthant).array()).matrix();
    return out;
  }

  // W^{-1} v = R^{-T} mat(v) R^{-1}; orthant v / w
  Eigen::VectorXd apply_w_inv(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd vm(d, d);
      svec_to_mat(v, off, vm);
      Eigen::MatrixXd res = sc.r_inv[b].transpose() * vm * sc.r_inv[b];
      res = 0.5 * (res + res.transpose()).eval();
      mat_to_svec(res, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) =
        (v.segment(oo, p.cones.orthant).array() / sc.w_orth.array()).matrix();
    return out;
  }

  // Jordan product u o v in scaled coordinates (lambda diagonal not assumed).
  Eigen::VectorXd jordan(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd um(d, d), vm(d, d);
      svec_to_mat(u, off, um);
      svec_to_mat(v, off, vm);
      Eigen::MatrixXd res = 0.5 * (um * vm + vm * um);
      mat_to_svec(res, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) =
        (u.segment(oo, p.cones.orthant).array() * v.segment(oo, p.cones.orthant).array()).matrix();
    return out;
  }

  // lambda o z = d solved for z, with lambda the (diagonal) scaling point.
  Eigen::VectorXd jordan_div_lambda(const Eigen::VectorXd& d_vec) const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd dm(d, d);
      svec_to_mat(d_vec, off, dm);
      const auto& lam = sc.lambda_psd[b];
      Eigen::MatrixXd res(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) res(r, c) = 2.0 * dm(r, c) / (lam[r] + lam[c]);
      mat_to_svec(res, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) =
        (d_vec.segment(oo, p.cones.orthant).array() / sc.lambda_orth.array()).matrix();
    return out;
  }

  Eigen::VectorXd lambda_vec() const {
    Eigen::VectorXd out(n);
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd lm = sc.lambda_psd[b].asDiagonal();
      mat_to_svec(lm, out, off);
    }
    const int oo = p.cones.orthant_offset();
    out.segment(oo, p.cones.orthant) = sc.lambda_orth;
    return out;
  }

  // Largest step alpha with lambda + alpha * mat(dir) still in the cone.
  double max_step_scaled(const Eigen::VectorXd& dir) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (size_t b = 0; b < p.cones.psd_sizes.size(); ++b) {
      const int d = p.cones.psd_sizes[b];
      const int off = p.cones.psd_offset(b);
      Eigen::MatrixXd dm(d, d);
      svec_to_mat(dir, off, dm);
      const auto& lam = sc.lambda_psd[b];
      Eigen::MatrixXd scaled(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) scaled(r, c) = dm(r, c) / std::sqrt(lam[r] * lam[c]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
      const double mn = es.eigenvalues().minCoeff();
      if (mn < 0.0) alpha = std::min(alpha, -1.0 / mn);
    }
    const int oo = p.cones.orthant_offset();
    for (int i = 0; i < p.cones.orthant; ++i) {
      const double d = dir[oo + i];
      if (d < 0.0) alpha = std::min(alpha, -sc.lambda_orth[i] / d);
    }
    return alpha;
  }
};

}  // namespace detail

ConicSolution solve(const ConicProgram& program, const SolveOptions& opt) {
  program.validate();
  detail::Work w(program, opt);
  const int n = w.n;
  const int m = w.m;

  ConicSolution sol;

  // Zero rows: drop if consistent, report infeasible otherwise.
  {
    std::vector<char> has_entry(m, 0);
    for (size_t k = 0; k < program.a_val.size(); ++k)
      if (program.a_val[k] != 0.0) has_entry[program.a_row[k]] = 1;
    for (int r = 0; r < m; ++r) {
      if (!has_entry[r] && std::abs(program.b[r]) > 0.0) {
        sol.status = SolveStatus::Infeasible;
        sol.message = "row " + std::to_string(r) + " is identically zero with nonzero rhs";
        return sol;
      }
    }
  }

  w.x = w.identity_point();
  w.s = w.identity_point();
  w.y = Eigen::VectorXd::Zero(m);
  w.tau = 1.0;
  w.kappa = 1.0;

  const double nu = program.cones.barrier_degree() + 1;
  const double bnorm = std::max(1.0, program.b.norm());
  const double cnorm = std::max(1.0, program.c.norm());

  double last_mu = std::numeric_limits<double>::infinity();
  int stall_count = 0;

  auto converged = [&]() {
    const Eigen::VectorXd xs = w.x / w.tau;
    const Eigen::VectorXd ys = w.y / w.tau;
    const Eigen::VectorXd ss = w.s / w.tau;
    const double pres = (w.a * xs - program.b).norm() / bnorm;
    const double dres = (w.at * ys + ss - program.c).norm() / cnorm;
    const double pobj = program.c.dot(xs);
    const double dobj = program.b.dot(ys);
    const double gap = xs.dot(ss);
    const double relgap = gap / std::max({1.0, std::abs(pobj), std::abs(dobj)});
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.relative_gap = relgap;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    return pres <= opt.tolerance && dres <= opt.tolerance && relgap <= opt.tolerance;
  };

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    sol.iterations = iter;
    w.hash_vec(w.x);
    w.hash_vec(w.y);
    w.hash_vec(w.s);

    // residuals of the embedding
    Eigen::VectorXd rx = w.a * w.x - program.b * w.tau;
    Eigen::VectorXd ry = -w.at * w.y + program.c * w.tau - w.s;
    const double rt = program.b.dot(w.y) - program.c.dot(w.x) - w.kappa;
    const double mu = (w.x.dot(w.s) + w.tau * w.kappa) / nu;

    if (converged()) {
      sol.status = SolveStatus::Optimal;
      sol.x = w.x;
      sol.y = w.y;
      sol.s = w.s;
      sol.tau = w.tau;
      sol.kappa = w.kappa;
      sol.iterate_hash = w.hash;
      return sol;
    }

    // infeasibility certificates
    const double by = program.b.dot(w.y);
    if (by > opt.tolerance) {
      const double cert = (w.at * w.y + w.s).norm() / (by);
      if (cert <= opt.tolerance * cnorm) {
        sol.status = SolveStatus::Infeasible;
        sol.y = w.y / by;
        sol.s = w.s / by;
        sol.tau = w.tau;
        sol.kappa = w.kappa;
        sol.iterate_hash = w.hash;
        sol.message = "primal infeasibility certificate found";
        return sol;
      }
    }
    const double cx = -program.c.dot(w.x);
    if (cx > opt.tolerance) {
      const double cert = (w.a * w.x).norm() / cx;
      if (cert <= opt.tolerance * bnorm) {
        sol.status = SolveStatus::Unbounded;
        sol.x = w.x / cx;
        sol.tau = w.tau;
        sol.kappa = w.kappa;
        sol.iterate_hash = w.hash;
        sol.message = "dual infeasibility certificate found (objective unbounded)";
        return sol;
      }
    }

    if (!w.compute_scaling()) {
      sol.status = SolveStatus::Stalled;
      sol.message = "iterate left the cone interior at iteration " + std::to_string(iter);
      break;
    }

    // normal matrix in Gram form: M = (W A^T)^T (W A^T), PSD by construction
    Eigen::MatrixXd w_at(n, m);
    for (int j = 0; j < m; ++j) w_at.col(j) = w.apply_w(w.at.col(j));
    Eigen::MatrixXd normal = w_at.transpose() * w_at;
    normal = 0.5 * (normal + normal.transpose()).eval();
    double reg = 1e-14 * std::max(1.0, normal.trace() / std::max(1, m));
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::MatrixXd shifted = normal + reg * Eigen::MatrixXd::Identity(m, m);
      llt.compute(shifted);
      if (llt.info() == Eigen::Success) break;
      reg *= 100.0;
    }
    if (llt.info() != Eigen::Success) {
      sol.status = SolveStatus::Stalled;
      sol.message = "normal equations not positive definite";
      break;
    }
    auto normal_solve = [&](const Eigen::VectorXd& rhs) {
      Eigen::VectorXd sol0 = llt.solve(rhs);
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXd resid = rhs - normal * sol0;
        sol0 += llt.solve(resid);
      }
      return sol0;
    };

    // constant-column solve, reused by both predictor and corrector
    Eigen::VectorXd hinv_c = w.apply_hinv(program.c);
    Eigen::VectorXd y1 = normal_solve(program.b + w.a * hinv_c);
    Eigen::VectorXd x1 = w.apply_hinv(w.at * y1) - hinv_c;

    const Eigen::VectorXd lambda = w.lambda_vec();

    auto kkt_solve = [&](double sigma, const Eigen::VectorXd& ds_rhs, double dkappa_rhs,
                         Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& ds,
                         double& dtau, double& dkappa) {
      const double one_minus = 1.0 - sigma;
      Eigen::VectorXd ds_tilde = w.jordan_div_lambda(ds_rhs);
      Eigen::VectorXd rhs_x = -one_minus * ry + w.apply_w_inv(ds_tilde);
      Eigen::VectorXd y2 = normal_solve(-one_minus * rx - w.a * w.apply_hinv(rhs_x));
      Eigen::VectorXd x2 = w.apply_hinv(rhs_x + w.at * y2);
      const double denom = program.b.dot(y1) - program.c.dot(x1) + w.kappa / w.tau;
      const double numer =
          -one_minus * rt - program.b.dot(y2) + program.c.dot(x2) + dkappa_rhs / w.tau;
      dtau = numer / denom;
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      // recover ds and dkappa from the linear rows (exact by construction;
      // the complementarity rows absorb the roundoff instead)
      ds = -(w.at * dy) + dtau * program.c + one_minus * ry;
      dkappa = program.b.dot(dy) - program.c.dot(dx) + one_minus * rt;
    };

    // predictor (affine)
    Eigen::VectorXd dxa, dya, dsa;
    double dtaua, dkappaa;
    {
      Eigen::VectorXd ds_rhs = -w.jordan(lambda, lambda);
      kkt_solve(0.0, ds_rhs, -w.tau * w.kappa, dxa, dya, dsa, dtaua, dkappaa);
    }
    Eigen::VectorXd dxa_scaled = w.apply_w_invt(dxa);
    Eigen::VectorXd dsa_scaled = w.apply_w(dsa);
    double alpha_aff = std::min(w.max_step_scaled(dxa_scaled), w.max_step_scaled(dsa_scaled));
    if (dtaua < 0.0) alpha_aff = std::min(alpha_aff, -w.tau / dtaua);
    if (dkappaa < 0.0) alpha_aff = std::min(alpha_aff, -w.kappa / dkappaa);
    alpha_aff = std::min(1.0, alpha_aff);
    const double mu_aff = ((w.x + alpha_aff * dxa).dot(w.s + alpha_aff * dsa) +
                           (w.tau + alpha_aff * dtaua) * (w.kappa + alpha_aff * dkappaa)) /
                          nu;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(1.0, std::max(1e-8, sigma));

    // corrector (combined)
    Eigen::VectorXd dx, dy, ds;
    double dtau, dkappa;
    {
      Eigen::VectorXd e = w.identity_point();
      Eigen::VectorXd ds_rhs =
          sigma * mu * e - w.jordan(lambda, lambda) - w.jordan(dxa_scaled, dsa_scaled);
      const double dk_rhs = sigma * mu - w.tau * w.kappa - dtaua * dkappaa;
      kkt_solve(sigma, ds_rhs, dk_rhs, dx, dy, ds, dtau, dkappa);
    }
#ifdef SCBC_CONIC_DEBUG
    {
      Eigen::VectorXd eq_d = -w.at * dy + dtau * program.c - ds + (1.0 - sigma) * ry;
      Eigen::VectorXd eq_p = w.a * dx - dtau * program.b + (1.0 - sigma) * rx;
      const double eq_g = program.b.dot(dy) - program.c.dot(dx) - dkappa + (1.0 - sigma) * rt;
      std::fprintf(stderr,
                   "it=%d mu=%.2e pres=%.2e dres=%.2e sig=%.2e |Deq|=%.2e |Peq|=%.2e |Geq|=%.2e\n",
                   iter, mu, sol.primal_residual, sol.dual_residual, sigma, eq_d.norm(),
                   eq_p.norm(), std::abs(eq_g));
    }
#endif
    Eigen::VectorXd dx_scaled = w.apply_w_invt(dx);
    Eigen::VectorXd ds_scaled = w.apply_w(ds);
    double alpha = std::min(w.max_step_scaled(dx_scaled), w.max_step_scaled(ds_scaled));
    if (dtau < 0.0) alpha = std::min(alpha, -w.tau / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -w.kappa / dkappa);
    alpha = std::min(1.0, opt.step_fraction * alpha);

    if (!std::isfinite(alpha) || alpha <= 1e-10) {
      // combined direction unusable (corrector noise at small mu);
      // retry with a pure centering step before giving up
      Eigen::VectorXd e = w.identity_point();
      Eigen::VectorXd ds_rhs = 0.8 * mu * e - w.jordan(lambda, lambda);
      kkt_solve(0.8, ds_rhs, 0.8 * mu - w.tau * w.kappa, dx, dy, ds, dtau, dkappa);
      dx_scaled = w.apply_w_invt(dx);
      ds_scaled = w.apply_w(ds);
      alpha = std::min(w.max_step_scaled(dx_scaled), w.max_step_scaled(ds_scaled));
      if (dtau < 0.0) alpha = std::min(alpha, -w.tau / dtau);
      if (dkappa < 0.0) alpha = std::min(alpha, -w.kappa / dkappa);
      alpha = std::min(1.0, opt.step_fraction * alpha);
      if (!std::isfinite(alpha) || alpha <= 1e-10) {
        sol.status = SolveStatus::Stalled;
        sol.message = "step length collapsed at iteration " + std::to_string(iter);
        break;
      }
    }

    // take the step, backing off if roundoff pushed the iterate out of the cone
    {
      const Eigen::VectorXd x0s = w.x, y0s = w.y, s0s = w.s;
      const double tau0 = w.tau, kappa0 = w.kappa;
      bool placed = false;
      for (int backoff = 0; backoff < 6; ++backoff) {
        w.x = x0s + alpha * dx;
        w.y = y0s + alpha * dy;
        w.s = s0s + alpha * ds;
        w.tau = tau0 + alpha * dtau;
        w.kappa = kappa0 + alpha * dkappa;
        if (w.strictly_interior()) {
          placed = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!placed) {
        w.x = x0s;
        w.y = y0s;
        w.s = s0s;
        w.tau = tau0;
        w.kappa = kappa0;
        sol.status = SolveStatus::Stalled;
        sol.message = "could not stay in the cone interior at iteration " + std::to_string(iter);
        break;
      }
    }

    if (mu < 0.9 * last_mu) {
      stall_count = 0;
      last_mu = mu;
    } else if (++stall_count > 25) {
      sol.status = SolveStatus::Stalled;
      sol.message = "no progress in complementarity";
      break;
    }
  }

  // the final step may have crossed the line; evaluate it before giving up,
  // then try a least-squares projection of x onto {A x = tau b}: the dual row
  // is exact by construction, so only the primal residual needs polishing
  if (!converged() && m > 0) {
    Eigen::MatrixXd aat = Eigen::MatrixXd(w.a) * Eigen::MatrixXd(w.at);
    aat.diagonal().array() += 1e-14 * std::max(1.0, aat.trace() / m);
    Eigen::LLT<Eigen::MatrixXd> llt(aat);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd resid = w.a * w.x - program.b * w.tau;
      Eigen::VectorXd lam = llt.solve(resid);
      lam += llt.solve(resid - aat * lam);
      Eigen::VectorXd candidate = w.x - w.at * lam;
      if ((candidate - w.x).norm() <= 1e-4 * std::max(1.0, w.x.norm())) w.x = candidate;
    }
  }
  if (converged()) {
    sol.status = SolveStatus::Optimal;
    sol.message.clear();
  } else if (sol.message.empty()) {
    sol.message = "iteration limit reached";
  }
  sol.x = w.x;
  sol.y = w.y;
  sol.s = w.s;
  sol.tau = w.tau;
  sol.kappa = w.kappa;
  sol.iterate_hash = w.hash;
  return sol;
}

ResidualReport certify(const ConicProgram& program, const ConicSolution& solution) {
  ResidualReport rep;
  const int n = program.cones.scalar_size();
  const int m = program.rows;
  if (solution.tau <= 0.0) return rep;
  Eigen::VectorXd x = solution.x / solution.tau;
  Eigen::VectorXd y = solution.y / solution.tau;
  Eigen::VectorXd s = solution.s / solution.tau;

  // residuals recomputed entry-by-entry in reverse triplet order
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(n);
  for (size_t k = program.a_val.size(); k-- > 0;) {
    ax[program.a_row[k]] += program.a_val[k] * x[program.a_col[k]];
    aty[program.a_col[k]] += program.a_val[k] * y[program.a_row[k]];
  }
  rep.equality_residual = (ax - program.b).norm();
  rep.dual_residual = (aty + s - program.c).norm();
  rep.duality_gap = std::abs(program.c.dot(x) - program.b.dot(y));
  for (size_t b = 0; b < program.cones.psd_sizes.size(); ++b) {
    const int d = program.cones.psd_sizes[b];
    Eigen::MatrixXd xm(d, d);
    svec_to_mat(x, program.cones.psd_offset(b), xm);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xm, Eigen::EigenvaluesOnly);
    rep.psd_min_eigenvalues.push_back(es.eigenvalues().minCoeff());
  }
  rep.orthant_min = program.cones.orthant > 0
                        ? x.segment(program.cones.orthant_offset(), program.cones.orthant).minCoeff()
                        : 0.0;
  return rep;
}

bool ResidualReport::within(double tol) const {
  if (equality_residual > tol || dual_residual > tol || duality_gap > tol) return false;
  for (double e : psd_min_eigenvalues)
    if (e < -tol) return false;
  return orthant_min >= -tol;
}

void write_solution_csv(const ConicProgram& program, const ConicSolution& solution,
                        const std::string& dir) {
  std::filesystem::create_directories(dir);
  Eigen::VectorXd x = solution.primal();
  for (size_t b = 0; b < program.cones.psd_sizes.size(); ++b) {
    const int d = program.cones.psd_sizes[b];
    Eigen::MatrixXd xm(d, d);
    svec_to_mat(x, program.cones.psd_offset(b), xm);
    char name[32];
    std::snprintf(name, sizeof(name), "psd_%03zu.csv", b);
    std::ofstream os(std::filesystem::path(dir) / name);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) os << (c ? "," : "") << xm(r, c);
      os << '\n';
    }
  }
  if (program.cones.orthant > 0) {
    std::ofstream os(std::filesystem::path(dir) / "orthant.csv");
    const int oo = program.cones.orthant_offset();
    for (int i = 0; i < program.cones.orthant; ++i) os << x[oo + i] << '\n';
  }
}

}  // namespace scbc
