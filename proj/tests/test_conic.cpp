#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "scbc/conic.hpp"
#include "scbc/noise.hpp"

using namespace scbc;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// min x s.t. [[x, 1], [1, x]] >= 0; optimum x = 1
ConicProgram eigenvalue_example() {
  ConicProgram p;
  p.cones.psd_sizes = {2};
  p.rows = 2;
  p.c = Eigen::VectorXd::Zero(3);
  p.c[0] = 1.0;
  p.b = Eigen::VectorXd::Zero(2);
  p.b[0] = 1.0;
  p.add_entry(0, 1, 1.0 / kSqrt2);  // X12 = 1
  p.add_entry(1, 0, 1.0);           // X11 = X22
  p.add_entry(1, 2, -1.0);
  return p;
}

// feasibility: Tr X = 1, X11 = 1 forces X = diag(1, 0)
ConicProgram forced_face_example() {
  ConicProgram p;
  p.cones.psd_sizes = {2};
  p.rows = 2;
  p.c = Eigen::VectorXd::Zero(3);
  p.b = Eigen::VectorXd::Ones(2);
  p.add_entry(0, 0, 1.0);
  p.add_entry(0, 2, 1.0);
  p.add_entry(1, 0, 1.0);
  return p;
}

// min Tr(diag(1,2) X) s.t. Tr X = 1; optimum 1 at X = diag(1, 0)
ConicProgram trace_objective_example() {
  ConicProgram p;
  p.cones.psd_sizes = {2};
  p.rows = 1;
  p.c = Eigen::VectorXd::Zero(3);
  p.c[0] = 1.0;
  p.c[2] = 2.0;
  p.b = Eigen::VectorXd::Ones(1);
  p.add_entry(0, 0, 1.0);
  p.add_entry(0, 2, 1.0);
  return p;
}

}  // namespace

TEST_CASE("analytic SDP examples solve to tight residuals") {
  SUBCASE("eigenvalue bound") {
    auto sol = solve(eigenvalue_example());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
    auto rep = certify(eigenvalue_example(), sol);
    CHECK(rep.within(1e-7));
    Eigen::MatrixXd x(2, 2);
    svec_to_mat(sol.primal(), 0, x);
    CHECK(x(0, 1) == doctest::Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("forced face") {
    auto sol = solve(forced_face_example());
    REQUIRE(sol.status == SolveStatus::Optimal);
    Eigen::MatrixXd x(2, 2);
    svec_to_mat(sol.primal(), 0, x);
    CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(x(1, 1)) < 1e-6);
    CHECK(std::abs(x(0, 1)) < 1e-6);
  }
  SUBCASE("trace objective against extreme points") {
    // brute-force oracle: extreme points of {X >= 0, Tr X = 1} are vv^T with |v| = 1;
    // sweep the circle for the minimum of Tr(C vv^T)
    double best = 1e30;
    for (int k = 0; k < 2000; ++k) {
      const double a = M_PI * k / 2000.0;
      Eigen::Vector2d v(std::cos(a), std::sin(a));
      best = std::min(best, v[0] * v[0] * 1.0 + v[1] * v[1] * 2.0);
    }
    CHECK(best == doctest::Approx(1.0).epsilon(1e-6));
    auto sol = solve(trace_objective_example());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.primal_objective == doctest::Approx(best).epsilon(1e-7));
  }
}

TEST_CASE("certify flags a perturbed solution") {
  auto prog = eigenvalue_example();
  auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(certify(prog, sol).within(1e-7));
  ConicSolution bad = sol;
  bad.x[0] += 1e-3 * bad.tau;
  CHECK_FALSE(certify(prog, bad).within(1e-7));
  CHECK(certify(prog, bad).equality_residual > 1e-4);
}

TEST_CASE("solver is deterministic") {
  auto h1 = solve(eigenvalue_example()).iterate_hash;
  auto h2 = solve(eigenvalue_example()).iterate_hash;
  CHECK(h1 == h2);
}

TEST_CASE("status and optimum are scale invariant") {
  auto base = trace_objective_example();
  SolveOptions tight;
  tight.tolerance = 1e-10;
  auto sol1 = solve(base, tight);
  ConicProgram scaled = base;
  scaled.b *= 1e3;
  scaled.c *= 1e3;
  auto sol2 = solve(scaled, tight);
  REQUIRE(sol1.status == SolveStatus::Optimal);
  REQUIRE(sol2.status == SolveStatus::Optimal);
  CHECK(std::abs(sol2.primal_objective - 1e6 * sol1.primal_objective) <=
        1e-9 * std::abs(sol2.primal_objective));
}

TEST_CASE("weak duality on returned solutions") {
  for (auto make : {eigenvalue_example, forced_face_example, trace_objective_example}) {
    auto sol = solve(make());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.primal_objective >= sol.dual_objective - 1e-6 * (1.0 + std::abs(sol.primal_objective)));
  }
}

TEST_CASE("infeasible and unbounded problems are certified") {
  SUBCASE("infeasible orthant") {
    ConicProgram p;
    p.cones.orthant = 1;
    p.rows = 1;
    p.c = Eigen::VectorXd::Zero(1);
    p.b = Eigen::VectorXd::Constant(1, -1.0);
    p.add_entry(0, 0, 1.0);
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }
  SUBCASE("zero row with nonzero rhs") {
    ConicProgram p;
    p.cones.orthant = 1;
    p.rows = 1;
    p.c = Eigen::VectorXd::Zero(1);
    p.b = Eigen::VectorXd::Constant(1, 2.0);
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }
  SUBCASE("unbounded objective") {
    ConicProgram p;
    p.cones.orthant = 2;
    p.rows = 1;
    p.c = Eigen::VectorXd::Zero(2);
    p.c[0] = -1.0;
    p.b = Eigen::VectorXd::Ones(1);
    p.add_entry(0, 1, 1.0);
    CHECK(solve(p).status == SolveStatus::Unbounded);
  }
}

TEST_CASE("random feasible problems built from known interior pairs") {
  Rng rng{SeedStream(314)};
  for (int instance = 0; instance < 8; ++instance) {
    const int d = 3 + instance % 3;       // PSD block size
    const int orth = 2;
    const int m = 4 + instance % 4;       // equalities
    ConeLayout cones;
    cones.psd_sizes = {d};
    cones.orthant = orth;
    const int n = cones.scalar_size();

    // strictly feasible primal point
    Eigen::MatrixXd base = Eigen::MatrixXd::NullaryExpr(d, d, [&](int, int) { return rng.uniform(-1, 1); });
    Eigen::MatrixXd x0m = base * base.transpose() + Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    mat_to_svec(x0m, x0, 0);
    for (int i = 0; i < orth; ++i) x0[n - orth + i] = rng.uniform(0.5, 2.0);
    // strictly feasible dual slack
    Eigen::MatrixXd sbase = Eigen::MatrixXd::NullaryExpr(d, d, [&](int, int) { return rng.uniform(-1, 1); });
    Eigen::MatrixXd s0m = sbase * sbase.transpose() + Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(n);
    mat_to_svec(s0m, s0, 0);
    for (int i = 0; i < orth; ++i) s0[n - orth + i] = rng.uniform(0.5, 2.0);

    ConicProgram p;
    p.cones = cones;
    p.rows = m;
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(m, n, [&](int, int) { return rng.uniform(-1, 1); });
    for (int r = 0; r < m; ++r)
      for (int col = 0; col < n; ++col) p.add_entry(r, col, a(r, col));
    Eigen::VectorXd y0 = Eigen::VectorXd::NullaryExpr(m, [&](int) { return rng.uniform(-1, 1); });
    p.b = a * x0;
    p.c = s0 + a.transpose() * y0;

    auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto rep = certify(p, sol);
    const double scale = std::max({1.0, p.b.cwiseAbs().maxCoeff(), p.c.cwiseAbs().maxCoeff()});
    CHECK(rep.equality_residual <= 1e-6 * scale);
    CHECK(rep.dual_residual <= 1e-6 * scale);
    CHECK(rep.duality_gap <= 1e-5 * scale);
  }
}

TEST_CASE("text format round-trips losslessly") {
  auto prog = eigenvalue_example();
  std::ostringstream os;
  prog.write_text(os);
  std::istringstream is(os.str());
  ConicProgram back = ConicProgram::read_text(is);
  std::ostringstream os2;
  back.write_text(os2);
  CHECK(os.str() == os2.str());
  auto s1 = solve(prog);
  auto s2 = solve(back);
  CHECK(s1.iterate_hash == s2.iterate_hash);
}
