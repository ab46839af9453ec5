#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scbc/noise.hpp"

using namespace scbc;

namespace {
Eigen::MatrixXd ident(int n) { return Eigen::MatrixXd::Identity(n, n); }
}  // namespace

TEST_CASE("point mass sampling is identically zero") {
  NoiseSpec s = NoiseSpec::point_mass(3);
  auto draws = s.sample(SeedStream(1), 5);
  for (const auto& d : draws) CHECK(d.isZero());
  CHECK(s.true_second_moment().isZero());
  CHECK(s.fourth_moment_variance() == 0.0);
}

TEST_CASE("uniform box empirical mean") {
  NoiseSpec s = NoiseSpec::uniform_box(Eigen::Vector3d::Constant(-0.2), Eigen::Vector3d::Constant(0.2));
  Rng rng{SeedStream(2024)};
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  const int count = 1000000;
  for (int i = 0; i < count; ++i) acc += s.sample(rng);
  acc /= count;
  CHECK(acc.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("gaussian empirical covariance") {
  NoiseSpec s = NoiseSpec::gaussian(Eigen::VectorXd::Zero(3), 0.006 * ident(3));
  Rng rng{SeedStream(7)};
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  const int count = 1000000;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v = s.sample(rng);
    acc += v * v.transpose();
  }
  acc /= count;
  CHECK((acc - 0.006 * ident(3)).cwiseAbs().maxCoeff() < 5e-4);
}

TEST_CASE("second moment closed forms") {
  NoiseSpec u = NoiseSpec::uniform_box(Eigen::Vector3d::Constant(-0.2), Eigen::Vector3d::Constant(0.2));
  CHECK((u.true_second_moment() - (0.16 / 12.0) * ident(3)).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  NoiseSpec g = NoiseSpec::gaussian(mu, ident(2));
  Eigen::MatrixXd expected = ident(2);
  expected(0, 0) += 1.0;
  CHECK((g.true_second_moment() - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("fourth moment variance closed form and Monte Carlo agreement") {
  // standard 2-d gaussian: E[|s|^4] = n^2 + 2n = 8, ||E[ss^T]||_F^2 = 2,
  // so the variance is 6 (the chi-square moment computation)
  NoiseSpec g2 = NoiseSpec::gaussian(Eigen::VectorXd::Zero(2), ident(2));
  CHECK(g2.fourth_moment_variance() == doctest::Approx(6.0));
  // Monte Carlo oracle
  Rng rng{SeedStream(99)};
  const Eigen::MatrixXd m2 = g2.true_second_moment();
  double acc = 0.0;
  const int count = 1000000;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v = g2.sample(rng);
    acc += (v * v.transpose() - m2).squaredNorm();
  }
  acc /= count;
  CHECK(std::abs(acc - 6.0) / 6.0 < 0.02);

  NoiseSpec g3 = NoiseSpec::gaussian(Eigen::VectorXd::Zero(3), 0.006 * ident(3));
  // (Tr S)^2 + ||S||_F^2 = 3.24e-4 + 1.08e-4
  CHECK(g3.fourth_moment_variance() == doctest::Approx(4.32e-4));
  // Monte Carlo cross-check of the small-scale case
  Rng rng3{SeedStream(123)};
  const Eigen::MatrixXd m23 = g3.true_second_moment();
  double acc3 = 0.0;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v = g3.sample(rng3);
    acc3 += (v * v.transpose() - m23).squaredNorm();
  }
  acc3 /= count;
  CHECK(std::abs(acc3 - 4.32e-4) / 4.32e-4 < 0.02);
}

TEST_CASE("fourth moment variance respects the declared bound") {
  auto bound = [](const NoiseSpec& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.gamma_sigma());
    const double tr = s.gamma_sigma().trace();
    return 2.0 * tr * tr + 2.0 * es.eigenvalues().maxCoeff() * s.gamma_mu().trace();
  };
  std::vector<NoiseSpec> specs;
  specs.push_back(NoiseSpec::point_mass(2));
  specs.push_back(NoiseSpec::uniform_box(Eigen::Vector3d::Constant(-0.2), Eigen::Vector3d::Constant(0.2)));
  specs.push_back(NoiseSpec::gaussian(Eigen::VectorXd::Zero(3), 0.006 * ident(3)));
  Eigen::VectorXd mu(2);
  mu << 0.3, -0.1;
  specs.push_back(NoiseSpec::gaussian(mu, 0.5 * ident(2)));
  for (const auto& s : specs) CHECK(s.fourth_moment_variance() <= bound(s) + 1e-9);
}

TEST_CASE("sampling is bit-identical for equal seeds") {
  NoiseSpec s = NoiseSpec::gaussian(Eigen::VectorXd::Zero(3), 0.01 * ident(3));
  auto a = s.sample(SeedStream(5).sub("traj").at(3), 10);
  auto b = s.sample(SeedStream(5).sub("traj").at(3), 10);
  auto c = s.sample(SeedStream(5).sub("traj").at(4), 10);
  for (int i = 0; i < 10; ++i) CHECK(a[i] == b[i]);
  bool differs = false;
  for (int i = 0; i < 10; ++i)
    if (a[i] != c[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("declared bounds are validated") {
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  NoiseSpec g = NoiseSpec::gaussian(mu, ident(2));
  CHECK_THROWS(g.with_bounds(Eigen::MatrixXd::Zero(2, 2), ident(2)));      // mu mu^T not <= 0
  CHECK_THROWS(g.with_bounds(mu * mu.transpose(), 0.5 * ident(2)));        // Sigma not <= 0.5 I
  CHECK_NOTHROW(g.with_bounds(mu * mu.transpose(), ident(2)));
  CHECK_THROWS(NoiseSpec::uniform_box(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)));
}
