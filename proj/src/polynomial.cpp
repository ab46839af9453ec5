#include "scbc/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scbc {

Monomial Monomial::variable(int vars, int index, unsigned power) {
  if (index < 0 || index >= vars) throw std::invalid_argument("variable index out of range");
  std::vector<unsigned> e(vars, 0);
  e[index] = power;
  return Monomial(std::move(e));
}

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (unsigned e : exponents) d += e;
  return d;
}

double Monomial::eval(const Eigen::VectorXd& x) const {
  if (x.size() != vars()) throw std::invalid_argument("monomial eval: dimension mismatch");
  double v = 1.0;
  for (int i = 0; i < vars(); ++i) {
    for (unsigned k = 0; k < exponents[i]; ++k) v *= x[i];
  }
  return v;
}

Monomial Monomial::times(const Monomial& other) const {
  if (other.vars() != vars()) throw std::invalid_argument("monomial product: dimension mismatch");
  Monomial r(*this);
  for (int i = 0; i < vars(); ++i) r.exponents[i] += other.exponents[i];
  return r;
}

std::string Monomial::str() const {
  if (is_constant()) return "1";
  std::ostringstream os;
  bool first = true;
  for (int i = 0; i < vars(); ++i) {
    if (exponents[i] == 0) continue;
    if (!first) os << "*";
    os << "x" << (i + 1);
    if (exponents[i] > 1) os << "^" << exponents[i];
    first = false;
  }
  return os.str();
}

bool operator==(const Monomial& a, const Monomial& b) { return a.exponents == b.exponents; }

bool monomial_less(const Monomial& a, const Monomial& b) {
  unsigned da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  unsigned ma = a.exponents.empty() ? 0 : *std::max_element(a.exponents.begin(), a.exponents.end());
  unsigned mb = b.exponents.empty() ? 0 : *std::max_element(b.exponents.begin(), b.exponents.end());
  if (ma != mb) return ma < mb;
  return a.exponents > b.exponents;  // larger exponent vector first
}

bool MonomialBasis::has_constant() const {
  for (const auto& m : entries)
    if (m.is_constant()) return true;
  return false;
}

unsigned MonomialBasis::max_degree() const {
  unsigned d = 0;
  for (const auto& m : entries) d = std::max(d, m.degree());
  return d;
}

Eigen::VectorXd MonomialBasis::eval(const Eigen::VectorXd& x) const {
  if (x.size() != vars) throw std::invalid_argument("basis eval: dimension mismatch");
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = entries[i].eval(x);
  return v;
}

int MonomialBasis::index_of(const Monomial& m) const {
  for (int i = 0; i < size(); ++i)
    if (entries[i] == m) return i;
  return -1;
}

std::string MonomialBasis::to_text() const {
  std::ostringstream os;
  for (const auto& m : entries) {
    for (int i = 0; i < vars; ++i) {
      if (i) os << ' ';
      os << m.exponents[i];
    }
    os << '\n';
  }
  return os.str();
}

MonomialBasis MonomialBasis::from_text(const std::string& text) {
  MonomialBasis b;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<unsigned> e;
    long v;
    while (ls >> v) {
      if (v < 0) throw std::invalid_argument("dictionary file: negative exponent");
      e.push_back(static_cast<unsigned>(v));
    }
    if (e.empty()) continue;
    if (b.vars == 0) b.vars = static_cast<int>(e.size());
    if (static_cast<int>(e.size()) != b.vars)
      throw std::invalid_argument("dictionary file: inconsistent variable count");
    Monomial m(std::move(e));
    if (b.index_of(m) >= 0) throw std::invalid_argument("dictionary file: duplicate monomial");
    b.entries.push_back(std::move(m));
  }
  return b;
}

namespace {

void enumerate_exponents(int n, unsigned degree, std::vector<unsigned>& cur, int pos,
                         unsigned remaining, std::vector<Monomial>& out) {
  if (pos == n - 1) {
    cur[pos] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (unsigned e = 0; e <= remaining; ++e) {
    cur[pos] = e;
    enumerate_exponents(n, degree, cur, pos + 1, remaining - e, out);
  }
}

std::vector<Monomial> monomials_of_degree(int n, unsigned degree) {
  std::vector<Monomial> out;
  std::vector<unsigned> cur(n, 0);
  enumerate_exponents(n, degree, cur, 0, degree, out);
  std::sort(out.begin(), out.end(), monomial_less);
  return out;
}

}  // namespace

MonomialBasis make_dictionary(int n, int max_degree) {
  if (n < 1) throw std::invalid_argument("make_dictionary: need at least one variable");
  if (max_degree < 1) throw std::invalid_argument("make_dictionary: need degree >= 1");
  MonomialBasis b;
  b.vars = n;
  for (int d = 1; d <= max_degree; ++d) {
    auto block = monomials_of_degree(n, static_cast<unsigned>(d));
    b.entries.insert(b.entries.end(), block.begin(), block.end());
  }
  return b;
}

MonomialBasis make_full_basis(int n, int max_degree) {
  if (n < 1) throw std::invalid_argument("make_full_basis: need at least one variable");
  if (max_degree < 0) throw std::invalid_argument("make_full_basis: negative degree");
  MonomialBasis b;
  b.vars = n;
  b.entries.push_back(Monomial::one(n));
  for (int d = 1; d <= max_degree; ++d) {
    auto block = monomials_of_degree(n, static_cast<unsigned>(d));
    b.entries.insert(b.entries.end(), block.begin(), block.end());
  }
  return b;
}

Polynomial Polynomial::constant(int vars, double c) {
  Polynomial p(vars);
  p.add_term(Monomial::one(vars), c);
  return p;
}

Polynomial Polynomial::from_monomial(const Monomial& m, double c) {
  Polynomial p(m.vars());
  p.add_term(m, c);
  return p;
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

double Polynomial::coeff(const Monomial& m) const {
  for (const auto& [mm, c] : terms_)
    if (mm == m) return c;
  return 0.0;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (m.vars() != vars_) throw std::invalid_argument("polynomial term: dimension mismatch");
  if (c == 0.0) return;
  auto it = std::lower_bound(
      terms_.begin(), terms_.end(), m,
      [](const std::pair<Monomial, double>& t, const Monomial& key) { return monomial_less(t.first, key); });
  if (it != terms_.end() && it->first == m) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  } else {
    terms_.insert(it, {m, c});
  }
}

double Polynomial::eval(const Eigen::VectorXd& x) const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * m.eval(x);
  return v;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  if (other.vars_ != vars_) throw std::invalid_argument("polynomial add: dimension mismatch");
  Polynomial r(*this);
  for (const auto& [m, c] : other.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + other.scaled(-1.0); }

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (other.vars_ != vars_) throw std::invalid_argument("polynomial mul: dimension mismatch");
  Polynomial r(vars_);
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : other.terms_) r.add_term(ma.times(mb), ca * cb);
  return r;
}

Polynomial Polynomial::scaled(double s) const {
  Polynomial r(vars_);
  if (s == 0.0) return r;
  r.terms_ = terms_;
  for (auto& [m, c] : r.terms_) c *= s;
  return r;
}

Polynomial Polynomial::substitute(int index, double value) const {
  if (index < 0 || index >= vars_) throw std::invalid_argument("substitute: index out of range");
  Polynomial r(vars_);
  for (const auto& [m, c] : terms_) {
    Monomial mm = m;
    double factor = 1.0;
    for (unsigned k = 0; k < m.exponents[index]; ++k) factor *= value;
    mm.exponents[index] = 0;
    r.add_term(mm, c * factor);
  }
  return r;
}

std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    os << std::abs(c);
    if (!m.is_constant()) os << "*" << m.str();
    first = false;
  }
  return os.str();
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  return a.vars() == b.vars() && a.terms() == b.terms();
}

PolyMatrix::PolyMatrix(int rows, int cols, int vars) : rows_(rows), cols_(cols), vars_(vars) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("PolyMatrix: negative dimension");
  cells_.assign(static_cast<size_t>(rows) * cols, Polynomial(vars));
}

PolyMatrix PolyMatrix::identity(int n, int vars) {
  PolyMatrix m(n, n, vars);
  for (int i = 0; i < n; ++i) m.at(i, i) = Polynomial::constant(vars, 1.0);
  return m;
}

PolyMatrix PolyMatrix::from_constant(const Eigen::MatrixXd& m, int vars) {
  PolyMatrix r(static_cast<int>(m.rows()), static_cast<int>(m.cols()), vars);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) r.at(i, j) = Polynomial::constant(vars, m(i, j));
  return r;
}

Polynomial& PolyMatrix::at(int r, int c) {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_) throw std::out_of_range("PolyMatrix::at");
  return cells_[static_cast<size_t>(r) * cols_ + c];
}

const Polynomial& PolyMatrix::at(int r, int c) const {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_) throw std::out_of_range("PolyMatrix::at");
  return cells_[static_cast<size_t>(r) * cols_ + c];
}

Eigen::MatrixXd PolyMatrix::eval(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = at(i, j).eval(x);
  return m;
}

unsigned PolyMatrix::max_degree() const {
  unsigned d = 0;
  for (const auto& p : cells_) d = std::max(d, p.degree());
  return d;
}

bool PolyMatrix::is_zero() const {
  for (const auto& p : cells_)
    if (!p.is_zero()) return false;
  return true;
}

PolyMatrix PolyMatrix::operator+(const PolyMatrix& other) const {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw std::invalid_argument("PolyMatrix add: dimension mismatch");
  PolyMatrix r(rows_, cols_, vars_);
  for (size_t i = 0; i < cells_.size(); ++i) r.cells_[i] = cells_[i] + other.cells_[i];
  return r;
}

PolyMatrix PolyMatrix::operator-(const PolyMatrix& other) const { return *this + other.scaled(-1.0); }

PolyMatrix PolyMatrix::operator*(const PolyMatrix& other) const {
  if (cols_ != other.rows_) throw std::invalid_argument("PolyMatrix mul: dimension mismatch");
  PolyMatrix r(rows_, other.cols_, vars_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < other.cols_; ++j) {
      Polynomial acc(vars_);
      for (int k = 0; k < cols_; ++k) acc = acc + at(i, k) * other.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

PolyMatrix PolyMatrix::scaled(double s) const {
  PolyMatrix r(rows_, cols_, vars_);
  for (size_t i = 0; i < cells_.size(); ++i) r.cells_[i] = cells_[i].scaled(s);
  return r;
}

PolyMatrix PolyMatrix::transpose() const {
  PolyMatrix r(cols_, rows_, vars_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
  return r;
}

PolyMatrix PolyMatrix::substitute(int index, double value) const {
  PolyMatrix r(rows_, cols_, vars_);
  for (size_t i = 0; i < cells_.size(); ++i) r.cells_[i] = cells_[i].substitute(index, value);
  return r;
}

PolyMatrix PolyMatrix::left_mul(const Eigen::MatrixXd& m) const {
  if (m.cols() != rows_) throw std::invalid_argument("PolyMatrix left_mul: dimension mismatch");
  PolyMatrix r(static_cast<int>(m.rows()), cols_, vars_);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < cols_; ++j) {
      Polynomial acc(vars_);
      for (int k = 0; k < rows_; ++k)
        if (m(i, k) != 0.0) acc = acc + at(k, j).scaled(m(i, k));
      r.at(i, j) = acc;
    }
  return r;
}

PolyMatrix PolyMatrix::right_mul(const Eigen::MatrixXd& m) const {
  if (m.rows() != cols_) throw std::invalid_argument("PolyMatrix right_mul: dimension mismatch");
  PolyMatrix r(rows_, static_cast<int>(m.cols()), vars_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < m.cols(); ++j) {
      Polynomial acc(vars_);
      for (int k = 0; k < cols_; ++k)
        if (m(k, j) != 0.0) acc = acc + at(i, k).scaled(m(k, j));
      r.at(i, j) = acc;
    }
  return r;
}

PolyMatrix PolyMatrix::vstack(const PolyMatrix& other) const {
  if (other.cols_ != cols_) throw std::invalid_argument("PolyMatrix vstack: column mismatch");
  PolyMatrix r(rows_ + other.rows_, cols_, vars_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(i, j) = at(i, j);
  for (int i = 0; i < other.rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(rows_ + i, j) = other.at(i, j);
  return r;
}

bool operator==(const PolyMatrix& a, const PolyMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.vars() != b.vars()) return false;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (!(a.at(i, j) == b.at(i, j))) return false;
  return true;
}

PolyMatrix basis_column(const MonomialBasis& basis) {
  PolyMatrix r(basis.size(), 1, basis.vars);
  for (int i = 0; i < basis.size(); ++i) r.at(i, 0) = Polynomial::from_monomial(basis.entries[i]);
  return r;
}

PolyMatrix factorize_dictionary(const MonomialBasis& basis) {
  if (basis.has_constant())
    throw std::invalid_argument("factorize_dictionary: constant monomial cannot absorb a factor of x");
  const int n = basis.vars;
  PolyMatrix j(basis.size(), n, n);
  for (int r = 0; r < basis.size(); ++r) {
    const Monomial& m = basis.entries[r];
    int col = -1;
    for (int v = 0; v < n; ++v) {
      if (m.exponents[v] > 0) {
        col = v;
        break;
      }
    }
    if (col < 0) throw std::invalid_argument("factorize_dictionary: zero monomial");
    Monomial reduced = m;
    reduced.exponents[col] -= 1;
    j.at(r, col) = Polynomial::from_monomial(reduced);
  }
  return j;
}

}  // namespace scbc
