#include "scbc/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace scbc {

namespace {

uint64_t splitmix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

bool is_psd(const Eigen::MatrixXd& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().minCoeff() >= -tol * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

SeedStream SeedStream::sub(const std::string& tag) const {
  return SeedStream(splitmix64(seed ^ fnv1a(tag)));
}

SeedStream SeedStream::at(uint64_t index) const {
  return SeedStream(splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15ull));
}

uint64_t Rng::next_u64() {
  state_ = splitmix64(state_);
  return state_;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  if (u1 <= 0.0) u1 = 1.0 / 9007199254740992.0;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::PointMass: return "point-mass";
    case NoiseKind::UniformBox: return "uniform";
    case NoiseKind::Gaussian: return "gaussian";
  }
  return "?";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "point-mass") return NoiseKind::PointMass;
  if (s == "uniform") return NoiseKind::UniformBox;
  if (s == "gaussian") return NoiseKind::Gaussian;
  throw std::invalid_argument("unknown noise kind: " + s);
}

NoiseSpec NoiseSpec::point_mass(int dim) {
  NoiseSpec s;
  s.kind_ = NoiseKind::PointMass;
  s.mean_ = Eigen::VectorXd::Zero(dim);
  s.cov_ = Eigen::MatrixXd::Zero(dim, dim);
  s.gamma_mu_ = Eigen::MatrixXd::Zero(dim, dim);
  s.gamma_sigma_ = Eigen::MatrixXd::Zero(dim, dim);
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::uniform_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("uniform_box: bound size mismatch");
  if ((hi - lo).minCoeff() < 0.0) throw std::invalid_argument("uniform_box: hi < lo");
  NoiseSpec s;
  s.kind_ = NoiseKind::UniformBox;
  s.lo_ = lo;
  s.hi_ = hi;
  s.mean_ = 0.5 * (lo + hi);
  Eigen::VectorXd widths = hi - lo;
  s.cov_ = (widths.array().square() / 12.0).matrix().asDiagonal();
  s.gamma_mu_ = s.mean_ * s.mean_.transpose();
  s.gamma_sigma_ = s.cov_;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw std::invalid_argument("gaussian: covariance size mismatch");
  if (!is_psd(cov)) throw std::invalid_argument("gaussian: covariance must be symmetric PSD");
  NoiseSpec s;
  s.kind_ = NoiseKind::Gaussian;
  s.mean_ = mean;
  s.cov_ = 0.5 * (cov + cov.transpose());
  s.gamma_mu_ = mean * mean.transpose();
  s.gamma_sigma_ = s.cov_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.cov_);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  s.cov_factor_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  s.validate();
  return s;
}

NoiseSpec& NoiseSpec::with_bounds(const Eigen::MatrixXd& gamma_mu, const Eigen::MatrixXd& gamma_sigma) {
  gamma_mu_ = gamma_mu;
  gamma_sigma_ = gamma_sigma;
  validate();
  return *this;
}

void NoiseSpec::validate() const {
  const int n = dim();
  if (gamma_mu_.rows() != n || gamma_sigma_.rows() != n)
    throw std::invalid_argument("noise bounds: dimension mismatch");
  if (!is_psd(gamma_mu_)) throw std::invalid_argument("gamma_mu must be symmetric PSD");
  if (!is_psd(gamma_sigma_)) throw std::invalid_argument("gamma_sigma must be symmetric PSD");
  if (!is_psd(gamma_mu_ - mean_ * mean_.transpose(), 1e-9))
    throw std::invalid_argument("declared mean violates mu mu^T <= gamma_mu");
  if (!is_psd(gamma_sigma_ - cov_, 1e-9))
    throw std::invalid_argument("declared covariance violates Sigma <= gamma_sigma");
}

Eigen::MatrixXd NoiseSpec::true_second_moment() const {
  return cov_ + mean_ * mean_.transpose();
}

double NoiseSpec::fourth_moment_variance(int mc_samples, uint64_t mc_seed) const {
  switch (kind_) {
    case NoiseKind::PointMass:
      return 0.0;
    case NoiseKind::Gaussian: {
      // (Tr S)^2 + ||S||_F^2 + 2 mu^T S mu + 2 |mu|^2 Tr S, from the quartic
      // Gaussian moment E[(x^T x)^2] = (Tr S)^2 + 2 Tr(S^2) + ... ; bounded by
      // 2 (Tr S)^2 + 2 lambda_max Tr(mu mu^T) whenever the mean is small
      const double tr = cov_.trace();
      return tr * tr + cov_.squaredNorm() + 2.0 * mean_.dot(cov_ * mean_) +
             2.0 * mean_.squaredNorm() * tr;
    }
    case NoiseKind::UniformBox: {
      const Eigen::MatrixXd m2 = true_second_moment();
      Rng rng{SeedStream(mc_seed)};
      double acc = 0.0;
      for (int i = 0; i < mc_samples; ++i) {
        Eigen::VectorXd v = sample(rng);
        acc += (v * v.transpose() - m2).squaredNorm();
      }
      return acc / mc_samples;
    }
  }
  return 0.0;
}

Eigen::VectorXd NoiseSpec::sample(Rng& rng) const {
  const int n = dim();
  switch (kind_) {
    case NoiseKind::PointMass:
      return Eigen::VectorXd::Zero(n);
    case NoiseKind::UniformBox: {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo_[i], hi_[i]);
      return v;
    }
    case NoiseKind::Gaussian: {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.gaussian();
      return mean_ + cov_factor_ * z;
    }
  }
  return Eigen::VectorXd::Zero(n);
}

std::vector<Eigen::VectorXd> NoiseSpec::sample(SeedStream stream, int count) const {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  Rng rng(stream);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sample(rng));
  return out;
}

}  // namespace scbc
