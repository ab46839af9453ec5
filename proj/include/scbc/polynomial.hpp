#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace scbc {

// Monomial in n variables, one exponent per variable.
struct Monomial {
  std::vector<unsigned> exponents;

  Monomial() = default;
  explicit Monomial(std::vector<unsigned> e) : exponents(std::move(e)) {}
  static Monomial one(int vars) { return Monomial(std::vector<unsigned>(vars, 0)); }
  static Monomial variable(int vars, int index, unsigned power = 1);

  int vars() const { return static_cast<int>(exponents.size()); }
  unsigned degree() const;
  bool is_constant() const { return degree() == 0; }
  double eval(const Eigen::VectorXd& x) const;
  Monomial times(const Monomial& other) const;
  std::string str() const;  // e.g. "x1^2*x3"
};

bool operator==(const Monomial& a, const Monomial& b);

// Canonical term order: total degree first, then largest exponent, then the
// lexicographically larger exponent vector. Within one degree this lists
// square-free cross terms before pure powers (x1*x2, x1*x3, x2*x3, x1^2, ...),
// the convention used by the benchmark dictionaries.
bool monomial_less(const Monomial& a, const Monomial& b);

// Ordered dictionary of monomials, no duplicates.
struct MonomialBasis {
  int vars = 0;
  std::vector<Monomial> entries;

  int size() const { return static_cast<int>(entries.size()); }
  bool has_constant() const;
  unsigned max_degree() const;
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  int index_of(const Monomial& m) const;  // -1 if absent

  // Text format: one monomial per line as space-separated exponents.
  std::string to_text() const;
  static MonomialBasis from_text(const std::string& text);
};

// All monomials of total degree 1..max_degree in n variables, canonical order.
MonomialBasis make_dictionary(int n, int max_degree);

// All monomials of total degree 0..max_degree (includes the constant).
MonomialBasis make_full_basis(int n, int max_degree);

// Sparse polynomial with double coefficients in canonical order.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int vars) : vars_(vars) {}
  static Polynomial constant(int vars, double c);
  static Polynomial from_monomial(const Monomial& m, double c = 1.0);

  int vars() const { return vars_; }
  bool is_zero() const { return terms_.empty(); }
  unsigned degree() const;
  const std::vector<std::pair<Monomial, double>>& terms() const { return terms_; }

  double coeff(const Monomial& m) const;
  void add_term(const Monomial& m, double c);  // canonical collection
  double eval(const Eigen::VectorXd& x) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial scaled(double s) const;
  // Fixes variable `index` to `value`; the result keeps the same variable count.
  Polynomial substitute(int index, double value) const;

  std::string str() const;

 private:
  int vars_ = 0;
  std::vector<std::pair<Monomial, double>> terms_;
};

bool operator==(const Polynomial& a, const Polynomial& b);

// Dense matrix of polynomials.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(int rows, int cols, int vars);
  static PolyMatrix identity(int n, int vars);
  static PolyMatrix from_constant(const Eigen::MatrixXd& m, int vars);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int vars() const { return vars_; }
  Polynomial& at(int r, int c);
  const Polynomial& at(int r, int c) const;

  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
  unsigned max_degree() const;
  bool is_zero() const;

  PolyMatrix operator+(const PolyMatrix& other) const;
  PolyMatrix operator-(const PolyMatrix& other) const;
  PolyMatrix operator*(const PolyMatrix& other) const;
  PolyMatrix scaled(double s) const;
  PolyMatrix transpose() const;
  PolyMatrix substitute(int index, double value) const;

  // Mixed products with constant matrices.
  PolyMatrix left_mul(const Eigen::MatrixXd& m) const;   // m * this
  PolyMatrix right_mul(const Eigen::MatrixXd& m) const;  // this * m

  // Stacks this on top of other (column counts must match).
  PolyMatrix vstack(const PolyMatrix& other) const;

 private:
  int rows_ = 0, cols_ = 0, vars_ = 0;
  std::vector<Polynomial> cells_;  // row-major
};

bool operator==(const PolyMatrix& a, const PolyMatrix& b);

// Column vector of the basis entries as a PolyMatrix (l x 1).
PolyMatrix basis_column(const MonomialBasis& basis);

// Factorization F(x) = J(x) x for a dictionary without constant entries:
// each monomial is assigned to the column of its lowest-index variable with
// positive exponent, with that exponent reduced by one.
PolyMatrix factorize_dictionary(const MonomialBasis& basis);

}  // namespace scbc
