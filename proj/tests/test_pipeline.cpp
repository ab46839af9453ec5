#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scbc/driver.hpp"
#include "scbc/verify.hpp"

using namespace scbc;

namespace {

struct Toy {
  SystemModel model;
  RegionSpec regions;

  static Toy make() {
    Eigen::MatrixXd a(1, 1), b(1, 1);
    a << 0.5;
    b << 1.0;
    NoiseSpec noise = NoiseSpec::gaussian(Eigen::VectorXd::Zero(1),
                                          0.01 * Eigen::MatrixXd::Identity(1, 1));
    SystemModel model(a, b, make_dictionary(1, 1), PolyMatrix::identity(1, 1), noise,
                      Box::cube(1, -1.0, 1.0));
    RegionSpec regions;
    regions.state_box = Box::cube(1, -5.0, 5.0);
    regions.initial_box = Box::cube(1, -0.5, 0.5);
    regions.unsafe_boxes = {Box::cube(1, 4.0, 5.0), Box::cube(1, -5.0, -4.0)};
    regions.validate();
    return Toy{std::move(model), std::move(regions)};
  }
};

}  // namespace

TEST_CASE("one-dimensional end-to-end synthesis and verification") {
  Toy toy = Toy::make();
  Eigen::MatrixXd u = draw_input_sequence(toy.model, 5, SeedStream(71));
  TrajectoryBatch batch = run_experiment(toy.model, Eigen::VectorXd::Constant(1, 0.0), u, 400,
                                         SeedStream(71));

  SynthesisOptions opts;
  opts.kappas = {0.9, 1.0};
  opts.rhos = {0.5};
  opts.degrees.k_degree = 0;
  opts.safety_horizon = 50;
  SynthesisOutcome outcome =
      synthesize(batch, toy.model.f_basis(), toy.model.g_poly(), toy.regions,
                 toy.model.noise().gamma_mu(), toy.model.noise().gamma_sigma(), opts);
  REQUIRE(outcome.feasible());
  const Certificate& cert = *outcome.best;
  CHECK(cert.ok());
  CHECK(cert.eta < cert.delta);
  CHECK(cert.beta1 < 1.0);
  CHECK(cert.beta2 == doctest::Approx(5.0 * outcome.setup.beta2bar));
  CHECK(cert.p(0, 0) > 0.0);
  // grid over (kappa, rho) recorded one entry per pair
  CHECK(outcome.grid.size() == 2);

  VerificationReport rep = run_verification(toy.model, cert, toy.regions, 41, 2000,
                                            SeedStream(555));
  CHECK(rep.martingale_pass);
  CHECK(rep.levels_pass);
  CHECK(rep.mc.pass);
  CHECK(rep.all_pass);
}

TEST_CASE("the synthesis path never touches oracle data") {
  Toy toy = Toy::make();
  Eigen::MatrixXd u = draw_input_sequence(toy.model, 4, SeedStream(13));
  TrajectoryBatch batch =
      run_experiment(toy.model, Eigen::VectorXd::Zero(1), u, 150, SeedStream(13));
  SynthesisOptions opts;
  opts.kappas = {0.95};
  opts.rhos = {0.5};
  opts.degrees.k_degree = 0;
  audit::reset();
  SynthesisOutcome outcome =
      synthesize(batch, toy.model.f_basis(), toy.model.g_poly(), toy.regions,
                 toy.model.noise().gamma_mu(), toy.model.noise().gamma_sigma(), opts);
  CHECK(audit::reads() == 0);
  REQUIRE(outcome.feasible());
  CHECK(audit::reads() == 0);
}

TEST_CASE("the pipeline is deterministic end to end") {
  Toy toy = Toy::make();
  auto run_once = [&]() {
    Eigen::MatrixXd u = draw_input_sequence(toy.model, 5, SeedStream(2024));
    TrajectoryBatch batch =
        run_experiment(toy.model, Eigen::VectorXd::Zero(1), u, 200, SeedStream(2024));
    SynthesisOptions opts;
    opts.kappas = {0.9};
    opts.rhos = {0.5};
    opts.degrees.k_degree = 0;
    SynthesisOutcome outcome =
        synthesize(batch, toy.model.f_basis(), toy.model.g_poly(), toy.regions,
                   toy.model.noise().gamma_mu(), toy.model.noise().gamma_sigma(), opts);
    REQUIRE(outcome.feasible());
    return outcome.best->to_json_string();
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("robust mode reports certainty instead of a confidence complement") {
  Toy toy = Toy::make();
  Eigen::MatrixXd u = draw_input_sequence(toy.model, 4, SeedStream(42));
  TrajectoryBatch batch =
      run_experiment(toy.model, Eigen::VectorXd::Zero(1), u, 200, SeedStream(42));
  SynthesisOptions opts;
  opts.kappas = {0.95};
  opts.rhos = {0.5};
  opts.degrees.k_degree = 0;
  opts.mode = ConformityMode::Robust;
  opts.varkappa = 0.5;  // generous bound, the program stays feasible
  SynthesisOutcome outcome =
      synthesize(batch, toy.model.f_basis(), toy.model.g_poly(), toy.regions,
                 toy.model.noise().gamma_mu(), toy.model.noise().gamma_sigma(), opts);
  REQUIRE(outcome.feasible());
  CHECK(outcome.best->mode == ConformityMode::Robust);
  CHECK(outcome.best->beta2 == 0.0);
}

TEST_CASE("an uninformative grid yields no certificate") {
  Toy toy = Toy::make();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, 2);  // no excitation at the origin
  TrajectoryBatch batch = run_experiment(toy.model, Eigen::VectorXd::Zero(1), u, 5, SeedStream(3));
  SynthesisOptions opts;
  opts.kappas = {0.9};
  opts.rhos = {0.5};
  opts.degrees.k_degree = 0;
  opts.epsilon = 1e-4;  // almost no conformity slack with 5 samples
  SynthesisOutcome outcome =
      synthesize(batch, toy.model.f_basis(), toy.model.g_poly(), toy.regions,
                 toy.model.noise().gamma_mu(), toy.model.noise().gamma_sigma(), opts);
  CHECK_FALSE(outcome.feasible());
  CHECK(outcome.setup.vacuous);
}
