#include "scbc/soscompile.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace scbc {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475;

// Linear term on one cone coordinate.
struct LinTerm {
  int coord;
  double coef;
};

// Accumulated coefficient of one monomial in one upper-triangle entry of the
// effective constraint matrix.
struct MEntry {
  double constant = 0.0;
  std::vector<LinTerm> terms;
};

struct MonomialTable {
  std::map<std::vector<unsigned>, int> ids;
  std::vector<Monomial> list;

  int id(const Monomial& m) {
    auto it = ids.find(m.exponents);
    if (it != ids.end()) return it->second;
    const int new_id = static_cast<int>(list.size());
    ids.emplace(m.exponents, new_id);
    list.push_back(m);
    return new_id;
  }
  int lookup(const Monomial& m) const {
    auto it = ids.find(m.exponents);
    return it == ids.end() ? -1 : it->second;
  }
};

// Coefficient placed on the svec coordinate of upper entry (r,c).
double svec_entry_factor(int r, int c) { return r == c ? 1.0 : kInvSqrt2; }

}  // namespace

Eigen::MatrixXd CompileInfo::pbar(const ConicProgram& p, const ConicSolution& s) const {
  Eigen::MatrixXd sp(n, n);
  svec_to_mat(s.primal(), p.cones.psd_offset(pbar_block), sp);
  return sp + lambda_min * Eigen::MatrixXd::Identity(n, n);
}

PolyMatrix CompileInfo::kbar(const ConicProgram& p, const ConicSolution& s) const {
  Eigen::VectorXd x = s.primal();
  const int oo = p.cones.orthant_offset();
  PolyMatrix kb(m, n, n);
  const int nk = k_basis.size();
  for (int r = 0; r < m; ++r)
    for (int b = 0; b < n; ++b)
      for (int w = 0; w < nk; ++w) {
        const int base = oo + k_split_base + 2 * ((r * n + b) * nk + w);
        const double coef = x[base] - x[base + 1];
        if (coef != 0.0) kb.at(r, b).add_term(k_basis.entries[w], coef);
      }
  return kb;
}

double CompileInfo::eta_bar(const ConicProgram& p, const ConicSolution& s) const {
  return s.primal()[p.cones.orthant_offset() + eta_index];
}

std::vector<Polynomial> CompileInfo::alphas(const ConicProgram& p, const ConicSolution& s) const {
  Eigen::VectorXd x = s.primal();
  std::vector<Polynomial> out;
  if (degrees.alpha_degree == 0) {
    const int oo = p.cones.orthant_offset();
    for (int j = 0; j < horizon; ++j)
      out.push_back(
          Polynomial::constant(n, x[oo + alpha_scalar_base + j] / block_scales[j]));
    return out;
  }
  for (int j = 0; j < horizon; ++j) {
    const int d = alpha_basis.size();
    Eigen::MatrixXd g(d, d);
    svec_to_mat(x, p.cones.psd_offset(alpha_blocks[j]), g);
    Polynomial a(n);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        a.add_term(alpha_basis.entries[r].times(alpha_basis.entries[c]),
                   g(r, c) / block_scales[j]);
    out.push_back(std::move(a));
  }
  return out;
}

SdpProblem assemble_program(const std::vector<ConformityBlock>& dc, const PolyMatrix& j_poly,
                            const PolyMatrix& g_poly, const RegionSpec& regions, double kappa,
                            double rho, const SosDegrees& degrees, const SosFloors& floors,
                            const AssembleOptions& options) {
  if (dc.empty()) throw std::invalid_argument("assemble_program: no data-conformity blocks");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::invalid_argument("assemble_program: kappa must lie in (0, 1]");
  if (rho <= 0.0) throw std::invalid_argument("assemble_program: rho must be positive");
  if (degrees.alpha_degree < 0 || degrees.alpha_degree % 2 != 0)
    throw std::invalid_argument("assemble_program: alpha degree must be even");
  if (degrees.k_degree < 0) throw std::invalid_argument("assemble_program: negative k degree");

  CompileInfo info;
  info.n = dc[0].state_dim;
  info.l = j_poly.rows();
  info.q = g_poly.rows();
  info.m = g_poly.cols();
  info.horizon = static_cast<int>(dc.size());
  info.dilated = 2 * info.n + info.l + info.q;
  info.kappa = kappa;
  info.rho = rho;
  info.lambda_min = floors.pbar_min_eig;
  info.trace_target = floors.trace_target;
  info.degrees = degrees;
  info.options = options;

  const int n = info.n, l = info.l, q = info.q, horizon = info.horizon, D = info.dilated;
  if (j_poly.cols() != n) throw std::invalid_argument("assemble_program: J(x) column count");
  if (dc[0].lifted_dim != l + q)
    throw std::invalid_argument("assemble_program: block size vs dictionaries");
  if (regions.dim() != n) throw std::invalid_argument("assemble_program: region dimension");

  // per-block normalization, absorbed exactly by the multipliers alpha_j
  info.block_scales.clear();
  for (const auto& blk : dc)
    info.block_scales.push_back(std::max(1.0, blk.matrix.cwiseAbs().maxCoeff()));
  info.margin = floors.margin_scale;

  info.k_basis = make_full_basis(n, degrees.k_degree);
  const int nk = info.k_basis.size();
  if (degrees.alpha_degree >= 2) info.alpha_basis = make_full_basis(n, degrees.alpha_degree / 2);

  // constraint degree before scalarization
  unsigned deg_m = 0;
  deg_m = std::max(deg_m, j_poly.max_degree());
  deg_m = std::max(deg_m, g_poly.max_degree() + static_cast<unsigned>(degrees.k_degree));
  deg_m = std::max(deg_m, static_cast<unsigned>(degrees.alpha_degree));
  if (options.domain == SosDomain::StateBox) deg_m = std::max(deg_m, 2u);
  const int half = degrees.gram_half_degree >= 0
                       ? degrees.gram_half_degree
                       : static_cast<int>((deg_m + 1) / 2);
  info.gram_basis = make_full_basis(n, half);
  const int nb = info.gram_basis.size();

  // ---- cone layout -------------------------------------------------------
  ConeLayout cones;
  auto add_psd = [&](int d) {
    cones.psd_sizes.push_back(d);
    return static_cast<int>(cones.psd_sizes.size()) - 1;
  };
  info.pbar_block = add_psd(n);
  if (options.literal_levels) {
    if (!regions.z_eta || !regions.z_delta)
      throw std::invalid_argument("literal level mode requires z_eta and z_delta vectors");
    info.literal_eta_block = add_psd(n);
    info.literal_delta_block = add_psd(n);
    if (n >= 2)
      info.warning =
          "literal level containment requires a positive definite matrix to be dominated by a "
          "rank-one term; infeasible for state dimension >= 2";
  } else {
    info.vertices = regions.initial_box.vertices();
    for (size_t v = 0; v < info.vertices.size(); ++v) info.vertex_blocks.push_back(add_psd(n));
  }
  info.gram_block = add_psd(D * nb);
  if (options.domain == SosDomain::StateBox)
    for (int v = 0; v < n; ++v) info.box_mult_blocks.push_back(add_psd(D));
  if (degrees.alpha_degree >= 2)
    for (int j = 0; j < horizon; ++j) info.alpha_blocks.push_back(add_psd(info.alpha_basis.size()));

  int orthant = 0;
  info.eta_index = orthant++;
  if (options.literal_levels) info.delta_index = orthant++;
  if (degrees.alpha_degree == 0) {
    info.alpha_scalar_base = orthant;
    orthant += horizon;
  }
  info.k_split_base = orthant;
  orthant += 2 * info.m * n * nk;
  cones.orthant = orthant;

  ConicProgram prog;
  prog.cones = cones;
  const int total = cones.scalar_size();
  prog.c = Eigen::VectorXd::Zero(total);
  const int oo = cones.orthant_offset();
  prog.c[oo + info.eta_index] = -1.0;  // maximize eta_bar

  // coordinate helpers
  auto psd_coord = [&](int block, int d, int r, int c) {
    return cones.psd_offset(block) + svec_index(d, r, c);
  };
  auto pbar_terms = [&](int r, int c, double coef) {
    // coef * Pbar_rc as cone terms plus the lambda_min constant
    LinTerm t{psd_coord(info.pbar_block, n, std::min(r, c), std::max(r, c)),
              coef * svec_entry_factor(std::min(r, c), std::max(r, c))};
    return std::pair<LinTerm, double>(t, r == c ? coef * info.lambda_min : 0.0);
  };
  auto k_coords = [&](int r, int b, int w) {
    const int base = oo + info.k_split_base + 2 * ((r * n + b) * nk + w);
    return std::pair<int, int>(base, base + 1);
  };

  // ---- accumulate the effective constraint matrix ------------------------
  MonomialTable monos;
  const int const_id = monos.id(Monomial::one(n));
  std::unordered_map<uint64_t, MEntry> acc;
  auto key_of = [&](int r, int c, int mono) {
    return (static_cast<uint64_t>(r) * D + c) * 1000003ull + mono;
  };
  auto add_const = [&](int r, int c, const Monomial& mono, double v) {
    if (v == 0.0) return;
    acc[key_of(r, c, monos.id(mono))].constant += v;
  };
  auto add_var = [&](int r, int c, const Monomial& mono, int coord, double coef) {
    if (coef == 0.0) return;
    acc[key_of(r, c, monos.id(mono))].terms.push_back({coord, coef});
  };
  auto add_pbar = [&](int r, int c, const Monomial& mono, int pr, int pc, double coef) {
    auto [term, constant] = pbar_terms(pr, pc, coef);
    add_var(r, c, mono, term.coord, term.coef);
    if (constant != 0.0) add_const(r, c, mono, constant);
  };

  const Monomial one = Monomial::one(n);

  // block (1,1): -kappa * Pbar
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) add_pbar(r, c, one, r, c, -kappa);
  // block (3,3): -(1+rho)^{-1} * Pbar
  const int b3 = n + l + q;
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) add_pbar(b3 + r, b3 + c, one, r, c, -1.0 / (1.0 + rho));
  // block (2,3) top: J(x) * Pbar
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k)
        for (const auto& [mono, cf] : j_poly.at(a, k).terms())
          add_pbar(n + a, b3 + b, mono, k, b, cf);
  // block (2,3) bottom: G(x) * Kbar(x)
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < n; ++b)
      for (int r = 0; r < info.m; ++r)
        for (const auto& [mono_g, cg] : g_poly.at(a, r).terms())
          for (int w = 0; w < nk; ++w) {
            const Monomial mono = mono_g.times(info.k_basis.entries[w]);
            auto [plus, minus] = k_coords(r, b, w);
            add_var(n + l + a, b3 + b, mono, plus, cg);
            add_var(n + l + a, b3 + b, mono, minus, -cg);
          }
  // data-conformity combination: - sum_j alpha_j(x) * padded(R^DC_j)
  for (int j = 0; j < horizon; ++j) {
    const Eigen::MatrixXd& rdc = dc[j].matrix;
    const double scale_inv = 1.0 / info.block_scales[j];
    for (int a = 0; a < n + l + q; ++a)
      for (int b = a; b < n + l + q; ++b) {
        const double rv = rdc(a, b) * scale_inv;
        if (rv == 0.0) continue;
        if (degrees.alpha_degree == 0) {
          add_var(a, b, one, oo + info.alpha_scalar_base + j, -rv);
        } else {
          const int da = info.alpha_basis.size();
          for (int p1 = 0; p1 < da; ++p1)
            for (int p2 = p1; p2 < da; ++p2) {
              const Monomial mono = info.alpha_basis.entries[p1].times(info.alpha_basis.entries[p2]);
              const double gamma = (p1 == p2 ? 1.0 : 2.0) * svec_entry_factor(p1, p2);
              add_var(a, b, mono,
                      psd_coord(info.alpha_blocks[j], da, p1, p2), -rv * gamma);
            }
        }
      }
  }
  // SOS margin t on the diagonal
  for (int r = 0; r < D; ++r) add_const(r, r, one, info.margin);
  // box multipliers: + (hi - x_v)(x_v - lo) * S_v folded as part of the matrix
  if (options.domain == SosDomain::StateBox) {
    for (int v = 0; v < n; ++v) {
      const double lo = regions.state_box.lo[v], hi = regions.state_box.hi[v];
      const Monomial xv = Monomial::variable(n, v);
      const Monomial xv2 = Monomial::variable(n, v, 2);
      for (int r = 0; r < D; ++r)
        for (int c = r; c < D; ++c) {
          const int coord = psd_coord(info.box_mult_blocks[v], D, r, c);
          const double fac = svec_entry_factor(r, c);
          // fold g_v(x) S_v into the matrix, g_v(x) = -x_v^2 + (lo+hi) x_v - lo*hi
          add_var(r, c, xv2, coord, -1.0 * fac);
          add_var(r, c, xv, coord, (lo + hi) * fac);
          add_var(r, c, one, coord, -lo * hi * fac);
        }
    }
  }

  // ---- Gram product table -------------------------------------------------
  // products[mu] lists ordered basis pairs (i, i2) with m_i * m_i2 = mu
  std::map<int, std::vector<std::pair<int, int>>> products;
  for (int i = 0; i < nb; ++i)
    for (int i2 = 0; i2 < nb; ++i2) {
      const Monomial mu = info.gram_basis.entries[i].times(info.gram_basis.entries[i2]);
      products[monos.id(mu)].push_back({i, i2});
    }

  // every accumulated monomial must be reachable by the Gram products
  for (const auto& [key, entry] : acc) {
    const int mono = static_cast<int>(key % 1000003ull);
    if (!products.count(mono))
      throw std::invalid_argument("assemble_program: degree budget too small for monomial " +
                                  monos.list[mono].str());
  }

  // ---- equality rows -------------------------------------------------------
  std::vector<std::pair<int, double>> row_entries;
  int row = 0;
  auto flush_row = [&](double rhs) {
    for (const auto& [coord, coef] : row_entries) prog.add_entry(row, coord, coef);
    prog.b.conservativeResize(row + 1);
    prog.b[row] = rhs;
    ++row;
  };

  const int gram_off = cones.psd_offset(info.gram_block);
  const int gram_dim = D * nb;
  for (int k1 = 0; k1 < D; ++k1)
    for (int k2 = k1; k2 < D; ++k2) {
      const double mult = k1 == k2 ? 1.0 : 2.0;
      for (const auto& [mono, pairs] : products) {
        row_entries.clear();
        // Gram side
        for (const auto& [i1, i2] : pairs) {
          if (k1 == k2 && i1 > i2) continue;  // unordered within one y-block
          const int p1 = k1 * nb + i1;
          const int p2 = k2 * nb + i2;
          const int lo = std::min(p1, p2), hi = std::max(p1, p2);
          const double coef = (lo == hi ? 1.0 : 2.0) * svec_entry_factor(lo, hi);
          row_entries.push_back({gram_off + svec_index(gram_dim, lo, hi), coef});
        }
        // matrix side
        double rhs = 0.0;
        auto it = acc.find(key_of(k1, k2, mono));
        if (it != acc.end()) {
          for (const auto& t : it->second.terms) row_entries.push_back({t.coord, mult * t.coef});
          rhs = -mult * it->second.constant;
        }
        flush_row(rhs);
      }
    }

  // ---- level-set constraints ------------------------------------------------
  if (options.literal_levels) {
    const Eigen::VectorXd& ze = *regions.z_eta;
    const Eigen::VectorXd& zd = *regions.z_delta;
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) {
        // Pbar - etabar z z^T - V = 0
        row_entries.clear();
        auto [tp, cp] = pbar_terms(r, c, 1.0);
        row_entries.push_back({tp.coord, tp.coef});
        row_entries.push_back({oo + info.eta_index, -ze[r] * ze[c]});
        row_entries.push_back({psd_coord(info.literal_eta_block, n, r, c),
                               -svec_entry_factor(r, c)});
        flush_row(-cp);
        // deltabar z z^T - Pbar - W = 0
        row_entries.clear();
        auto [tm, cm] = pbar_terms(r, c, -1.0);
        row_entries.push_back({tm.coord, tm.coef});
        row_entries.push_back({oo + info.delta_index, zd[r] * zd[c]});
        row_entries.push_back({psd_coord(info.literal_delta_block, n, r, c),
                               -svec_entry_factor(r, c)});
        flush_row(-cm);
      }
  } else {
    for (size_t v = 0; v < info.vertices.size(); ++v) {
      const Eigen::VectorXd& vert = info.vertices[v];
      for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) {
          row_entries.clear();
          auto [tp, cp] = pbar_terms(r, c, 1.0);
          row_entries.push_back({tp.coord, tp.coef});
          row_entries.push_back({oo + info.eta_index, -vert[r] * vert[c]});
          row_entries.push_back({psd_coord(info.vertex_blocks[v], n, r, c),
                                 -svec_entry_factor(r, c)});
          flush_row(-cp);
        }
    }
  }

  // ---- trace normalization ---------------------------------------------------
  row_entries.clear();
  for (int r = 0; r < n; ++r) row_entries.push_back({psd_coord(info.pbar_block, n, r, r), 1.0});
  flush_row(n * (floors.trace_target - info.lambda_min));

  prog.rows = row;
  prog.validate();
  return SdpProblem{std::move(prog), std::move(info)};
}

namespace {

nlohmann::json basis_to_json(const MonomialBasis& b) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : b.entries) out.push_back(m.exponents);
  return out;
}

MonomialBasis basis_from_json(const nlohmann::json& j, int vars) {
  MonomialBasis b;
  b.vars = vars;
  for (const auto& e : j) b.entries.push_back(Monomial(e.get<std::vector<unsigned>>()));
  return b;
}

}  // namespace

std::string SdpProblem::to_json_string() const {
  nlohmann::json j;
  std::ostringstream os;
  program.write_text(os);
  j["program"] = os.str();
  j["n"] = info.n;
  j["l"] = info.l;
  j["q"] = info.q;
  j["m"] = info.m;
  j["horizon"] = info.horizon;
  j["dilated"] = info.dilated;
  j["kappa"] = info.kappa;
  j["rho"] = info.rho;
  j["margin"] = info.margin;
  j["lambda_min"] = info.lambda_min;
  j["trace_target"] = info.trace_target;
  j["k_degree"] = info.degrees.k_degree;
  j["alpha_degree"] = info.degrees.alpha_degree;
  j["gram_half_degree"] = info.degrees.gram_half_degree;
  j["domain"] = info.options.domain == SosDomain::StateBox ? "state_box" : "global";
  j["literal_levels"] = info.options.literal_levels;
  j["k_basis"] = basis_to_json(info.k_basis);
  j["gram_basis"] = basis_to_json(info.gram_basis);
  j["alpha_basis"] = basis_to_json(info.alpha_basis);
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : info.vertices)
    j["vertices"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
  j["pbar_block"] = info.pbar_block;
  j["gram_block"] = info.gram_block;
  j["vertex_blocks"] = info.vertex_blocks;
  j["box_mult_blocks"] = info.box_mult_blocks;
  j["alpha_blocks"] = info.alpha_blocks;
  j["literal_eta_block"] = info.literal_eta_block;
  j["literal_delta_block"] = info.literal_delta_block;
  j["eta_index"] = info.eta_index;
  j["delta_index"] = info.delta_index;
  j["alpha_scalar_base"] = info.alpha_scalar_base;
  j["k_split_base"] = info.k_split_base;
  j["warning"] = info.warning;
  j["block_scales"] = info.block_scales;
  return j.dump(2);
}

SdpProblem SdpProblem::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SdpProblem out;
  std::istringstream is(j.at("program").get<std::string>());
  out.program = ConicProgram::read_text(is);
  CompileInfo& info = out.info;
  info.n = j.at("n").get<int>();
  info.l = j.at("l").get<int>();
  info.q = j.at("q").get<int>();
  info.m = j.at("m").get<int>();
  info.horizon = j.at("horizon").get<int>();
  info.dilated = j.at("dilated").get<int>();
  info.kappa = j.at("kappa").get<double>();
  info.rho = j.at("rho").get<double>();
  info.margin = j.at("margin").get<double>();
  info.lambda_min = j.at("lambda_min").get<double>();
  info.trace_target = j.at("trace_target").get<double>();
  info.degrees.k_degree = j.at("k_degree").get<int>();
  info.degrees.alpha_degree = j.at("alpha_degree").get<int>();
  info.degrees.gram_half_degree = j.at("gram_half_degree").get<int>();
  info.options.domain =
      j.at("domain").get<std::string>() == "state_box" ? SosDomain::StateBox : SosDomain::Global;
  info.options.literal_levels = j.at("literal_levels").get<bool>();
  info.k_basis = basis_from_json(j.at("k_basis"), info.n);
  info.gram_basis = basis_from_json(j.at("gram_basis"), info.n);
  info.alpha_basis = basis_from_json(j.at("alpha_basis"), info.n);
  for (const auto& v : j.at("vertices")) {
    auto vec = v.get<std::vector<double>>();
    info.vertices.push_back(Eigen::Map<Eigen::VectorXd>(vec.data(), vec.size()));
  }
  info.pbar_block = j.at("pbar_block").get<int>();
  info.gram_block = j.at("gram_block").get<int>();
  info.vertex_blocks = j.at("vertex_blocks").get<std::vector<int>>();
  info.box_mult_blocks = j.at("box_mult_blocks").get<std::vector<int>>();
  info.alpha_blocks = j.at("alpha_blocks").get<std::vector<int>>();
  info.literal_eta_block = j.at("literal_eta_block").get<int>();
  info.literal_delta_block = j.at("literal_delta_block").get<int>();
  info.eta_index = j.at("eta_index").get<int>();
  info.delta_index = j.at("delta_index").get<int>();
  info.alpha_scalar_base = j.at("alpha_scalar_base").get<int>();
  info.k_split_base = j.at("k_split_base").get<int>();
  info.warning = j.at("warning").get<std::string>();
  info.block_scales = j.at("block_scales").get<std::vector<double>>();
  return out;
}

SosCheckResult sos_check(const Polynomial& p, const SolveOptions& solver_options) {
  if (p.degree() % 2 != 0) throw std::invalid_argument("sos_check: polynomial degree must be even");
  const int n = p.vars();
  const int half = static_cast<int>(p.degree() / 2);
  SosCheckResult result;
  result.basis = make_full_basis(n, half);
  const int nb = result.basis.size();

  MonomialTable monos;
  std::map<int, std::vector<std::pair<int, int>>> products;
  for (int i = 0; i < nb; ++i)
    for (int i2 = i; i2 < nb; ++i2) {
      const Monomial mu = result.basis.entries[i].times(result.basis.entries[i2]);
      products[monos.id(mu)].push_back({i, i2});
    }
  for (const auto& [mono, coef] : p.terms())
    if (monos.lookup(mono) < 0)
      throw std::invalid_argument("sos_check: monomial outside Gram range: " + mono.str());

  ConicProgram prog;
  prog.cones.psd_sizes = {nb};
  prog.c = Eigen::VectorXd::Zero(prog.cones.scalar_size());
  int row = 0;
  prog.b = Eigen::VectorXd::Zero(products.size());
  for (const auto& [mono, pairs] : products) {
    for (const auto& [i1, i2] : pairs) {
      const double coef = (i1 == i2 ? 1.0 : 2.0) * svec_entry_factor(i1, i2);
      prog.add_entry(row, svec_index(nb, i1, i2), coef);
    }
    prog.b[row] = p.coeff(monos.list[mono]);
    ++row;
  }
  prog.rows = row;
  prog.validate();

  result.solution = solve(prog, solver_options);
  result.is_sos = result.solution.status == SolveStatus::Optimal;
  if (result.is_sos) {
    // project onto the coefficient equalities so reconstruction is exact
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(prog.rows, prog.cones.scalar_size());
    for (size_t k = 0; k < prog.a_val.size(); ++k)
      a(prog.a_row[k], prog.a_col[k]) += prog.a_val[k];
    Eigen::VectorXd xp = result.solution.primal();
    Eigen::MatrixXd aat = a * a.transpose();
    aat.diagonal().array() += 1e-14 * std::max(1.0, aat.trace() / prog.rows);
    Eigen::LLT<Eigen::MatrixXd> llt(aat);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd resid = a * xp - prog.b;
      Eigen::VectorXd lam = llt.solve(resid);
      lam += llt.solve(resid - aat * lam);
      xp -= a.transpose() * lam;
    }
    result.gram.resize(nb, nb);
    svec_to_mat(xp, 0, result.gram);
    // reconstruct and compare coefficients
    Polynomial rec(n);
    for (int i = 0; i < nb; ++i)
      for (int i2 = 0; i2 < nb; ++i2)
        rec.add_term(result.basis.entries[i].times(result.basis.entries[i2]),
                     result.gram(i, i2));
    Polynomial diff = rec - p;
    double err = 0.0;
    for (const auto& [mono, coef] : diff.terms()) err = std::max(err, std::abs(coef));
    result.reconstruction_error = err;
  }
  return result;
}

}  // namespace scbc
