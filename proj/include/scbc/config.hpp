#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scbc/driver.hpp"
#include "scbc/system.hpp"

namespace scbc {

// Minimal TOML subset: [section] headers, key = value with booleans, numbers,
// strings and (nested) arrays, # comments. Enough for the run configs; no
// dotted keys, no inline tables.
namespace toml {

struct Value {
  enum class Type { Boolean, Number, String, Array };
  Type type = Type::Number;
  bool boolean = false;
  double number = 0.0;
  std::string text;
  std::vector<Value> array;

  static Value of(bool b);
  static Value of(double d);
  static Value of(const std::string& s);
  static Value of(std::vector<Value> a);

  double as_number() const;
  bool as_bool() const;
  const std::string& as_string() const;
  const std::vector<Value>& as_array() const;
  std::vector<double> as_numbers() const;
};

using Table = std::map<std::string, std::map<std::string, Value>>;

Table parse(const std::string& text);
std::string serialize(const Table& table);

}  // namespace toml

struct RunConfig {
  // [system]
  std::string benchmark = "lorenz";  // or "custom"
  double tau = 0.01;
  Eigen::Vector3d inertias{20.0, 18.0, 15.0};
  double input_bound = 5.0;
  std::optional<Box> input_box;
  std::optional<Eigen::MatrixXd> a_matrix, b_matrix;  // custom systems (oracle only)
  std::string dictionary_file;

  // [noise]
  std::optional<std::string> noise_kind;
  Eigen::VectorXd noise_mean, noise_lo, noise_hi;
  Eigen::MatrixXd noise_cov;
  std::optional<Eigen::MatrixXd> gamma_mu, gamma_sigma;

  // [regions]
  std::optional<RegionSpec> regions;

  // [experiment]
  int samples = 77;
  int data_horizon = 10;
  uint64_t seed = 2024;
  std::optional<Eigen::VectorXd> x0;

  // [synthesis]
  std::vector<double> kappas{1.0};
  std::vector<double> rhos{0.01};
  int k_degree = 1;
  int alpha_degree = 0;
  int gram_half_degree = -1;
  std::optional<double> epsilon;
  double beta2bar_target = 0.0;
  int safety_horizon = 100;
  std::string mode = "stochastic";
  double varkappa = 0.15;
  std::string sos_domain = "state_box";
  bool literal_levels = false;
  double solver_tol = 1e-8;
  int max_iterations = 200;
  double pbar_min_eig = 1e-6;
  double margin_scale = 1e-8;
  double trace_target = 1.0;

  // [verify]
  int grid_points = 21;
  int mc_runs = 10000;

  // [output]
  std::string output_dir = "out";

  SynthesisOptions synthesis_options() const;
};

RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& config);

// Reads the file; SCBC_SEED in the environment overrides the config seed.
RunConfig load_config_file(const std::filesystem::path& path);

// Instantiates the ground-truth system and regions (benchmark or custom).
Benchmark build_system(const RunConfig& config,
                       const std::filesystem::path& base_dir = ".");

}  // namespace scbc
