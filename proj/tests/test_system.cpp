#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scbc/system.hpp"

using namespace scbc;

namespace {

// 1-D model x+ = a x + b u + noise with the linear dictionary {x}.
SystemModel linear_model(double a, double b, NoiseSpec noise, double input_bound = 1.0) {
  Eigen::MatrixXd am(1, 1), bm(1, 1);
  am << a;
  bm << b;
  return SystemModel(am, bm, make_dictionary(1, 1), PolyMatrix::identity(1, 1), std::move(noise),
                     Box::cube(1, -input_bound, input_bound));
}

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

}  // namespace

TEST_CASE("step evaluates the lifted dynamics") {
  SUBCASE("zero system maps everything to the noise") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 1);
    SystemModel m(a, b, make_dictionary(2, 1), PolyMatrix::identity(1, 2),
                  NoiseSpec::point_mass(2), Box::cube(1, -1, 1));
    CHECK(m.step(Eigen::Vector2d(3, -4), vec1(2), Eigen::Vector2d::Zero()).isZero());
  }
  SUBCASE("first benchmark step by hand") {
    Benchmark bench = benchmark("lorenz");
    Eigen::VectorXd next =
        bench.model.step(Eigen::Vector3d(1, 0, 0), vec1(0.0), Eigen::Vector3d::Zero());
    CHECK(next[0] == doctest::Approx(0.9));
    CHECK(next[1] == doctest::Approx(0.28));
    CHECK(next[2] == doctest::Approx(0.0));
  }
  SUBCASE("one-dimensional linear model") {
    SystemModel m = linear_model(0.5, 1.0, NoiseSpec::point_mass(1));
    CHECK(m.step(vec1(2), vec1(1), vec1(0.1))[0] == doctest::Approx(2.1));
  }
}

TEST_CASE("step is linear in input and noise for fixed state") {
  Benchmark bench = benchmark("lorenz");
  Rng rng{SeedStream(3)};
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::Vector3d x = Eigen::Vector3d::NullaryExpr([&](int) { return rng.uniform(-2, 2); });
    Eigen::VectorXd u1 = vec1(rng.uniform(-1, 1)), u2 = vec1(rng.uniform(-1, 1));
    Eigen::Vector3d z = Eigen::Vector3d::NullaryExpr([&](int) { return rng.uniform(-0.1, 0.1); });
    Eigen::VectorXd lhs = bench.model.step(x, u1 + u2, z) - bench.model.step(x, u2, z);
    Eigen::VectorXd rhs =
        bench.model.step(x, u1, Eigen::Vector3d::Zero()) - bench.model.step(x, vec1(0), Eigen::Vector3d::Zero());
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("open-loop simulation") {
  Benchmark bench = benchmark("lorenz");
  SUBCASE("zero horizon returns only the initial state") {
    auto run = bench.model.simulate_open(Eigen::Vector3d(1, 2, 3), Eigen::MatrixXd(1, 0),
                                         SeedStream(1));
    REQUIRE(run.states.size() == 1);
    CHECK(run.states[0] == Eigen::Vector3d(1, 2, 3));
  }
  SUBCASE("deterministic composition under point-mass noise") {
    SystemModel det(bench.model.system_matrix_oracle(), bench.model.input_matrix_oracle(),
                    bench.model.f_basis(), bench.model.g_poly(), NoiseSpec::point_mass(3),
                    bench.model.input_box());
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, 2);
    auto run = det.simulate_open(Eigen::Vector3d(1, 0, 0), u, SeedStream(1));
    Eigen::VectorXd mid = det.step(Eigen::Vector3d(1, 0, 0), vec1(0), Eigen::Vector3d::Zero());
    Eigen::VectorXd last = det.step(mid, vec1(0), Eigen::Vector3d::Zero());
    CHECK((run.states[1] - mid).isZero());
    CHECK((run.states[2] - last).isZero());
  }
  SUBCASE("equal seeds reproduce the run; replay through step matches exactly") {
    Eigen::MatrixXd u = Eigen::MatrixXd::Random(1, 5);
    auto r1 = bench.model.simulate_open(Eigen::Vector3d(0.5, 0.5, 0.5), u, SeedStream(77));
    auto r2 = bench.model.simulate_open(Eigen::Vector3d(0.5, 0.5, 0.5), u, SeedStream(77));
    for (size_t k = 0; k < r1.states.size(); ++k) CHECK(r1.states[k] == r2.states[k]);
    Eigen::VectorXd x = r1.states[0];
    for (int k = 0; k < 5; ++k) {
      x = bench.model.step(x, u.col(k), r1.noise[k]);
      CHECK((x - r1.states[k + 1]).isZero());
    }
  }
  SUBCASE("divergence aborts with a diagnostic") {
    SystemModel unstable = linear_model(3.0, 0.0, NoiseSpec::point_mass(1));
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, 40);
    CHECK_THROWS_AS(unstable.simulate_open(vec1(1.0), u, SeedStream(0)), SimulationOverflow);
  }
}

TEST_CASE("closed-loop simulation flags unsafe entry") {
  SystemModel m = linear_model(1.0, 0.0, NoiseSpec::point_mass(1));
  Controller zero = Controller::zero(1, 1);
  SUBCASE("empty unsafe set is always safe") {
    auto run = m.simulate_closed(zero, vec1(0.5), 10, SeedStream(4), {});
    CHECK_FALSE(run.entered_unsafe);
    CHECK(run.first_violation == -1);
  }
  SUBCASE("starting inside the unsafe set is flagged at step zero") {
    auto run = m.simulate_closed(zero, vec1(0.5), 3, SeedStream(4), {Box::cube(1, 0.4, 0.6)});
    CHECK(run.entered_unsafe);
    CHECK(run.first_violation == 0);
  }
}

TEST_CASE("benchmarks expose the appendix dictionaries and regions") {
  SUBCASE("lorenz") {
    Benchmark b = benchmark("lorenz");
    CHECK(b.model.dict_size() == 9);
    CHECK(b.model.input_dim() == 1);
    CHECK(b.regions.initial_box.lo[0] == 0.0);
    CHECK(b.regions.initial_box.hi[0] == 1.5);
    CHECK(b.regions.initial_box.lo[1] == -1.5);
    REQUIRE(b.regions.unsafe_boxes.size() == 2);
    CHECK(b.regions.unsafe_boxes[0].lo[0] == -10.0);
    CHECK(b.regions.unsafe_boxes[0].hi[0] == -6.0);
    CHECK(b.regions.unsafe_boxes[1].lo[0] == 6.0);
    CHECK((b.model.noise().gamma_sigma() - 0.006 * Eigen::MatrixXd::Identity(3, 3)).isZero());
  }
  SUBCASE("chen dictionary holds the six cross terms") {
    Benchmark b = benchmark("chen");
    REQUIRE(b.model.dict_size() == 6);
    std::vector<std::vector<unsigned>> expected = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                                   {1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
    for (size_t i = 0; i < expected.size(); ++i)
      CHECK(b.model.f_basis().entries[i].exponents == expected[i]);
  }
  SUBCASE("spacecraft has seven terms including x1^2 and three inputs") {
    Benchmark b = benchmark("spacecraft");
    CHECK(b.model.dict_size() == 7);
    CHECK(b.model.input_dim() == 3);
    CHECK(b.model.f_basis().entries[6].exponents == std::vector<unsigned>{2, 0, 0});
  }
  CHECK_THROWS(benchmark("rossler"));
}

TEST_CASE("chen benchmark dynamics match the printed equations") {
  Benchmark b = benchmark("chen", BenchmarkOverrides{});
  // x = (1, 2, 3), u = 0.5: hand evaluation with tau = 0.01
  Eigen::Vector3d x(1, 2, 3);
  Eigen::VectorXd u(1);
  u << 0.5;
  Eigen::VectorXd next = b.model.step(x, u, Eigen::Vector3d::Zero());
  CHECK(next[0] == doctest::Approx(1 + 0.01 * (35 * 2 - 35 * 1)));
  CHECK(next[1] == doctest::Approx(2 + 0.01 * (-7 * 1 + 28 * 2 - 1 * 3 + 0.5)));
  CHECK(next[2] == doctest::Approx(3 + 0.01 * (1 * 2 - 3 * 3)));
}

TEST_CASE("spacecraft benchmark dynamics match the printed equations") {
  BenchmarkOverrides ov;
  Benchmark b = benchmark("spacecraft", ov);
  Eigen::Vector3d x(0.2, -0.3, 0.4);
  Eigen::Vector3d u(1.0, -2.0, 0.5);
  Eigen::VectorXd next = b.model.step(x, u, Eigen::Vector3d::Zero());
  const double j1 = 20, j2 = 18, j3 = 15, tau = 0.01;
  CHECK(next[0] == doctest::Approx(0.2 + tau * ((j2 - j3) / j1 * (-0.3) * 0.4 + 1.0 / j1)));
  CHECK(next[1] == doctest::Approx(-0.3 + tau * ((j3 - j1) / j2 * 0.2 * 0.4 + (-2.0) / j2)));
  CHECK(next[2] == doctest::Approx(0.4 + tau * ((j1 - j2) / j3 * 0.2 * (-0.3) + 0.5 / j3)));
}
