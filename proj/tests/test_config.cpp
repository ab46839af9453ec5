#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "scbc/config.hpp"

using namespace scbc;

namespace {

const char* kSample = R"(
# sample run configuration
[system]
benchmark = "lorenz"
tau = 0.01
input_bound = 5.0

[experiment]
samples = 77          # N
horizon = 10          # T
seed = 2024
x0 = [0.75, 0.75, 0.75]

[synthesis]
kappa = [1.0, 0.95]
rho = [0.01, 1.0]
k_degree = 1
alpha_degree = 0
epsilon = 0.1
safety_horizon = 100
mode = "stochastic"

[verify]
grid_points = 21
mc_runs = 10000

[output]
directory = "out/lorenz"
)";

}  // namespace

TEST_CASE("config parsing reads every section") {
  RunConfig c = parse_config(kSample);
  CHECK(c.benchmark == "lorenz");
  CHECK(c.tau == 0.01);
  CHECK(c.samples == 77);
  CHECK(c.data_horizon == 10);
  CHECK(c.seed == 2024);
  REQUIRE(c.x0.has_value());
  CHECK((*c.x0)[2] == 0.75);
  CHECK(c.kappas == std::vector<double>{1.0, 0.95});
  CHECK(c.rhos == std::vector<double>{0.01, 1.0});
  REQUIRE(c.epsilon.has_value());
  CHECK(*c.epsilon == 0.1);
  CHECK(c.safety_horizon == 100);
  CHECK(c.grid_points == 21);
  CHECK(c.mc_runs == 10000);
  CHECK(c.output_dir == "out/lorenz");
}

TEST_CASE("parse-serialize-parse is the identity") {
  RunConfig c = parse_config(kSample);
  const std::string one = serialize_config(c);
  RunConfig again = parse_config(one);
  CHECK(serialize_config(again) == one);
}

TEST_CASE("matrices, boxes and regions round-trip") {
  RunConfig c;
  c.benchmark = "custom";
  c.a_matrix = (Eigen::MatrixXd(2, 2) << 0.5, 0.25, 0.0, 0.75).finished();
  c.b_matrix = (Eigen::MatrixXd(2, 1) << 1.0, 0.0).finished();
  c.dictionary_file = "dict.txt";
  c.noise_kind = "gaussian";
  c.noise_mean = Eigen::VectorXd::Zero(2);
  c.noise_cov = 0.01 * Eigen::MatrixXd::Identity(2, 2);
  RegionSpec r;
  r.state_box = Box::cube(2, -4, 4);
  r.initial_box = Box::cube(2, -0.5, 0.5);
  r.unsafe_boxes = {Box::cube(2, 3, 4)};
  c.regions = r;
  c.input_box = Box::cube(1, -2, 2);

  const std::string text = serialize_config(c);
  RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  REQUIRE(back.a_matrix.has_value());
  CHECK((*back.a_matrix - *c.a_matrix).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.regions.has_value());
  CHECK(back.regions->unsafe_boxes.size() == 1);
}

TEST_CASE("multi-line arrays and comments parse") {
  const char* text = R"(
[noise]
kind = "gaussian"
mean = [0.0, 0.0]
covariance = [[0.01, 0.0],
              [0.0, 0.01]]   # identity scaled
)";
  RunConfig c = parse_config(text);
  REQUIRE(c.noise_kind.has_value());
  CHECK(c.noise_cov.rows() == 2);
  CHECK(c.noise_cov(1, 1) == 0.01);
}

TEST_CASE("malformed configs are rejected") {
  CHECK_THROWS(parse_config("[system\nbenchmark = \"x\"\n"));
  CHECK_THROWS(parse_config("[system]\nbenchmark\n"));
  CHECK_THROWS(parse_config("[system]\ntau = what\n"));
  CHECK_THROWS(parse_config("[noise]\nmean = [1.0,\n"));
}

TEST_CASE("build_system instantiates benchmarks with overrides") {
  RunConfig c = parse_config(kSample);
  Benchmark bench = build_system(c);
  CHECK(bench.model.dict_size() == 9);
  CHECK(bench.model.input_box().hi[0] == 5.0);
  CHECK(bench.regions.initial_box.hi[0] == 1.5);
}

TEST_CASE("custom systems require their inputs and read the dictionary file") {
  RunConfig c;
  c.benchmark = "custom";
  CHECK_THROWS(build_system(c));

  const auto dir = std::filesystem::temp_directory_path() / "scbc_cfg_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "dict.txt") << "1 0\n0 1\n";
  c.a_matrix = (Eigen::MatrixXd(2, 2) << 0.5, 0.0, 0.0, 0.5).finished();
  c.b_matrix = (Eigen::MatrixXd(2, 1) << 1.0, 0.5).finished();
  c.dictionary_file = "dict.txt";
  c.noise_kind = "point-mass";
  RegionSpec r;
  r.state_box = Box::cube(2, -4, 4);
  r.initial_box = Box::cube(2, -0.5, 0.5);
  r.unsafe_boxes = {Box::cube(2, 3, 4)};
  c.regions = r;
  Benchmark bench = build_system(c, dir);
  CHECK(bench.model.state_dim() == 2);
  CHECK(bench.model.dict_size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("environment variable overrides the seed") {
  const auto dir = std::filesystem::temp_directory_path() / "scbc_cfg_seed";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.toml") << kSample;
  setenv("SCBC_SEED", "99991", 1);
  RunConfig c = load_config_file(dir / "c.toml");
  CHECK(c.seed == 99991);
  unsetenv("SCBC_SEED");
  RunConfig c2 = load_config_file(dir / "c.toml");
  CHECK(c2.seed == 2024);
  std::filesystem::remove_all(dir);
}
