#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scbc/noise.hpp"
#include "scbc/polynomial.hpp"

#include <set>

using namespace scbc;

namespace {

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// independent counting oracle: enumerate all exponent vectors with 1 <= |a| <= d
long count_by_enumeration(int n, int d) {
  long count = 0;
  std::vector<unsigned> e(n, 0);
  // odometer over exponents bounded by d each; prune by total degree
  while (true) {
    unsigned total = 0;
    for (unsigned v : e) total += v;
    if (total >= 1 && total <= static_cast<unsigned>(d)) ++count;
    int i = 0;
    while (i < n && ++e[i] > static_cast<unsigned>(d)) e[i++] = 0;
    if (i == n) break;
  }
  return count;
}

Monomial mono(std::vector<unsigned> e) { return Monomial(std::move(e)); }

}  // namespace

TEST_CASE("make_dictionary matches the quadratic three-variable dictionary") {
  MonomialBasis b = make_dictionary(3, 2);
  REQUIRE(b.size() == 9);
  std::set<std::vector<unsigned>> expected = {
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1},
      {0, 1, 1}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}};
  std::set<std::vector<unsigned>> got;
  for (const auto& m : b.entries) got.insert(m.exponents);
  CHECK(got == expected);
  CHECK_FALSE(b.has_constant());
}

TEST_CASE("make_dictionary edge cases and counts") {
  MonomialBasis single = make_dictionary(1, 1);
  REQUIRE(single.size() == 1);
  CHECK(single.entries[0] == mono({1}));

  CHECK(make_dictionary(2, 3).size() == 9);  // C(5,2) - 1
  CHECK(make_dictionary(2, 3).size() == count_by_enumeration(2, 3));

  for (int n = 1; n <= 5; ++n)
    for (int d = 1; d <= 4; ++d)
      CHECK(make_dictionary(n, d).size() == binomial(n + d, n) - 1);

  CHECK_THROWS(make_dictionary(0, 2));
  CHECK_THROWS(make_dictionary(2, 0));
}

TEST_CASE("factorization produces an exact identity") {
  SUBCASE("linear dictionary gives the identity matrix") {
    MonomialBasis b = make_dictionary(2, 1);
    PolyMatrix j = factorize_dictionary(b);
    CHECK(j == PolyMatrix::identity(2, 2));
  }
  SUBCASE("mixed dictionary assigns the lowest-index variable") {
    MonomialBasis b;
    b.vars = 2;
    b.entries = {mono({1, 0}), mono({0, 1}), mono({1, 1})};
    PolyMatrix j = factorize_dictionary(b);
    CHECK(j.at(0, 0) == Polynomial::constant(2, 1.0));
    CHECK(j.at(1, 1) == Polynomial::constant(2, 1.0));
    CHECK(j.at(2, 0) == Polynomial::from_monomial(mono({0, 1})));  // x1 x2 -> column 1, entry x2
    CHECK(j.at(2, 1).is_zero());
  }
  SUBCASE("quadratic three-variable dictionary") {
    MonomialBasis b = make_dictionary(3, 2);
    PolyMatrix j = factorize_dictionary(b);
    REQUIRE(j.rows() == 9);
    REQUIRE(j.cols() == 3);
    const int row = b.index_of(mono({0, 1, 1}));  // x2 x3 absorbs x2
    CHECK(j.at(row, 0).is_zero());
    CHECK(j.at(row, 1) == Polynomial::from_monomial(mono({0, 0, 1})));
    CHECK(j.at(row, 2).is_zero());
  }
  SUBCASE("constant entries are rejected") {
    MonomialBasis b;
    b.vars = 2;
    b.entries = {mono({0, 0}), mono({1, 0})};
    CHECK_THROWS(factorize_dictionary(b));
  }
}

TEST_CASE("factorization identity holds on random points") {
  Rng rng{SeedStream(42)};
  for (int n = 1; n <= 3; ++n)
    for (int d = 1; d <= 3; ++d) {
      MonomialBasis b = make_dictionary(n, d);
      PolyMatrix j = factorize_dictionary(b);
      for (int trial = 0; trial < 120; ++trial) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = rng.uniform(-5.0, 5.0);
        Eigen::VectorXd lhs = j.eval(x) * x;
        Eigen::VectorXd rhs = b.eval(x);
        const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * scale);
      }
    }
}

TEST_CASE("basis evaluation") {
  MonomialBasis lin = make_dictionary(2, 1);
  CHECK(lin.eval(Eigen::Vector2d(0, 0)).isZero());

  MonomialBasis powers;
  powers.vars = 1;
  powers.entries = {mono({1}), mono({2})};
  Eigen::VectorXd x(1);
  x << 2.0;
  Eigen::VectorXd v = powers.eval(x);
  CHECK(v[0] == 2.0);
  CHECK(v[1] == 4.0);

  MonomialBasis lorenz = make_dictionary(3, 2);
  Eigen::VectorXd at = lorenz.eval(Eigen::Vector3d(1, 2, 3));
  Eigen::VectorXd expected(9);
  expected << 1, 2, 3, 2, 3, 6, 1, 4, 9;
  CHECK((at - expected).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS(lorenz.eval(Eigen::Vector2d(1, 2)));
}

TEST_CASE("polynomial arithmetic keeps canonical form") {
  Polynomial p(1);
  p.add_term(mono({1}), 1.0);
  p.add_term(mono({0}), 1.0);  // x + 1
  Polynomial q(1);
  q.add_term(mono({1}), 1.0);
  q.add_term(mono({0}), -1.0);  // x - 1

  SUBCASE("additive inverse") {
    Polynomial z = p + p.scaled(-1.0);
    CHECK(z.is_zero());
  }
  SUBCASE("difference of squares") {
    Polynomial prod = p * q;
    CHECK(prod.coeff(mono({2})) == 1.0);
    CHECK(prod.coeff(mono({0})) == -1.0);
    CHECK(prod.coeff(mono({1})) == 0.0);
  }
  SUBCASE("substitution") {
    Polynomial s = (p * q).substitute(0, 3.0);
    CHECK(s.coeff(mono({0})) == 8.0);
    CHECK(s.degree() == 0);
  }
}

TEST_CASE("transpose is an involution on a random matrix") {
  Rng rng{SeedStream(7)};
  PolyMatrix m(3, 2, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) {
      m.at(r, c).add_term(mono({(unsigned)(r % 2), (unsigned)(c % 2)}), rng.uniform(-2, 2));
      m.at(r, c).add_term(mono({1, 1}), rng.uniform(-2, 2));
    }
  CHECK(m.transpose().transpose() == m);
}

TEST_CASE("matrix product matches pointwise evaluation") {
  Rng rng{SeedStream(11)};
  MonomialBasis b = make_dictionary(2, 2);
  PolyMatrix j = factorize_dictionary(b);
  PolyMatrix jt = j.transpose();
  PolyMatrix prod = jt * j;  // 2x2
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.uniform(-3, 3), rng.uniform(-3, 3);
    Eigen::MatrixXd lhs = prod.eval(x);
    Eigen::MatrixXd rhs = j.eval(x).transpose() * j.eval(x);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-11 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("dictionary text format round-trips the ordering") {
  MonomialBasis b = make_dictionary(3, 3);
  MonomialBasis again = MonomialBasis::from_text(b.to_text());
  REQUIRE(again.size() == b.size());
  for (int i = 0; i < b.size(); ++i) CHECK(again.entries[i] == b.entries[i]);
  CHECK(again.to_text() == b.to_text());
}
