#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace scbc {

// Deterministic seed derivation. Sub-streams are derived from the master seed
// by hashing a tag and a counter through splitmix64:
//   sub(tag)   : seed' = splitmix64(seed ^ fnv1a(tag))
//   at(i)      : seed' = splitmix64(seed + (i+1) * 0x9E3779B97F4A7C15)
// so realization i of a named experiment is reproducible in isolation.
struct SeedStream {
  uint64_t seed = 0;

  explicit SeedStream(uint64_t s = 0) : seed(s) {}
  SeedStream sub(const std::string& tag) const;
  SeedStream at(uint64_t index) const;
};

// Counter-based generator; all draws below are bit-stable across platforms
// (no std::distribution involved).
class Rng {
 public:
  explicit Rng(SeedStream s) : state_(s.seed) {}
  uint64_t next_u64();
  double uniform01();                     // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double gaussian();                      // standard normal, Box-Muller

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

enum class NoiseKind { PointMass, UniformBox, Gaussian };

std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);

// Noise distribution with declared moment bounds mu mu^T <= gamma_mu and
// Sigma <= gamma_sigma. The declared bounds are validated at construction.
class NoiseSpec {
 public:
  static NoiseSpec point_mass(int dim);
  static NoiseSpec uniform_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  static NoiseSpec gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

  // Overrides the bounds (defaults are the exact moments).
  NoiseSpec& with_bounds(const Eigen::MatrixXd& gamma_mu, const Eigen::MatrixXd& gamma_sigma);

  NoiseKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& gamma_mu() const { return gamma_mu_; }
  const Eigen::MatrixXd& gamma_sigma() const { return gamma_sigma_; }
  const Eigen::VectorXd& box_lo() const { return lo_; }
  const Eigen::VectorXd& box_hi() const { return hi_; }

  // E[ss^T] = Sigma + mu mu^T.
  Eigen::MatrixXd true_second_moment() const;

  // E[|| s s^T - E[s s^T] ||_F^2]. Closed form for gaussian
  // (2 (Tr Sigma)^2 + 2 mu^T Sigma mu) and point-mass (0); other kinds are
  // estimated by Monte Carlo with `mc_samples` draws.
  double fourth_moment_variance(int mc_samples = 400000, uint64_t mc_seed = 0x5eed) const;

  Eigen::VectorXd sample(Rng& rng) const;
  std::vector<Eigen::VectorXd> sample(SeedStream stream, int count) const;

 private:
  NoiseSpec() = default;
  void validate() const;

  NoiseKind kind_ = NoiseKind::PointMass;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::VectorXd lo_, hi_;      // uniform-box only
  Eigen::MatrixXd gamma_mu_, gamma_sigma_;
  Eigen::MatrixXd cov_factor_;   // for gaussian sampling
};

}  // namespace scbc
