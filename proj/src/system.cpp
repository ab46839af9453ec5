#include "scbc/system.hpp"

#include <cmath>
#include <stdexcept>

namespace scbc {

namespace audit {

std::atomic<uint64_t>& oracle_counter() {
  static std::atomic<uint64_t> counter{0};
  return counter;
}

void reset() { oracle_counter().store(0); }
uint64_t reads() { return oracle_counter().load(); }

}  // namespace audit

SystemModel::SystemModel(Eigen::MatrixXd a, Eigen::MatrixXd b, MonomialBasis f_basis,
                         PolyMatrix g_poly, NoiseSpec noise, Box input_box)
    : n_(static_cast<int>(a.rows())),
      m_(g_poly.cols()),
      a_(std::move(a)),
      b_(std::move(b)),
      f_basis_(std::move(f_basis)),
      g_poly_(std::move(g_poly)),
      noise_(std::move(noise)),
      input_box_(std::move(input_box)) {
  if (a_.cols() != f_basis_.size()) throw std::invalid_argument("SystemModel: A vs dictionary size");
  if (b_.rows() != n_) throw std::invalid_argument("SystemModel: B row count");
  if (b_.cols() != g_poly_.rows()) throw std::invalid_argument("SystemModel: B vs G(x) rows");
  if (f_basis_.vars != n_) throw std::invalid_argument("SystemModel: dictionary variable count");
  if (f_basis_.has_constant())
    throw std::invalid_argument("SystemModel: dictionary must not contain a constant monomial");
  if (noise_.dim() != n_) throw std::invalid_argument("SystemModel: noise dimension");
  if (input_box_.dim() != m_) throw std::invalid_argument("SystemModel: input box dimension");
}

const Eigen::MatrixXd& SystemModel::system_matrix_oracle() const {
  audit::oracle_counter().fetch_add(1);
  return a_;
}

const Eigen::MatrixXd& SystemModel::input_matrix_oracle() const {
  audit::oracle_counter().fetch_add(1);
  return b_;
}

Eigen::MatrixXd SystemModel::phi_oracle() const {
  Eigen::MatrixXd phi(n_, a_.cols() + b_.cols());
  phi << system_matrix_oracle(), input_matrix_oracle();
  return phi;
}

Eigen::VectorXd SystemModel::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& noise) const {
  if (x.size() != n_ || u.size() != m_ || noise.size() != n_)
    throw std::invalid_argument("step: dimension mismatch");
  return a_ * f_basis_.eval(x) + b_ * (g_poly_.eval(x) * u) + noise;
}

SystemModel::OpenLoopRun SystemModel::simulate_open(const Eigen::VectorXd& x0,
                                                    const Eigen::MatrixXd& inputs,
                                                    SeedStream stream) const {
  if (inputs.rows() != m_ && inputs.size() != 0)
    throw std::invalid_argument("simulate_open: input row count");
  const int horizon = static_cast<int>(inputs.cols());
  OpenLoopRun run;
  run.states.push_back(x0);
  Rng rng(stream);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < horizon; ++k) {
    Eigen::VectorXd w = noise_.sample(rng);
    x = step(x, inputs.col(k), w);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kOverflowLimit)
      throw SimulationOverflow("simulate_open: state overflow at step " + std::to_string(k + 1));
    run.states.push_back(x);
    run.noise.push_back(std::move(w));
  }
  return run;
}

SystemModel::ClosedLoopRun SystemModel::simulate_closed(const Controller& controller,
                                                        const Eigen::VectorXd& x0, int horizon,
                                                        SeedStream stream,
                                                        const std::vector<Box>& unsafe) const {
  if (horizon < 1) throw std::invalid_argument("simulate_closed: horizon must be >= 1");
  ClosedLoopRun run;
  auto check = [&](const Eigen::VectorXd& x, int k) {
    if (run.entered_unsafe) return;
    for (const auto& b : unsafe) {
      if (b.contains(x)) {
        run.entered_unsafe = true;
        run.first_violation = k;
        return;
      }
    }
  };
  Rng rng(stream);
  Eigen::VectorXd x = x0;
  run.states.push_back(x);
  check(x, 0);
  for (int k = 0; k < horizon; ++k) {
    Eigen::VectorXd u = controller.control(x);
    x = step(x, u, noise_.sample(rng));
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kOverflowLimit)
      throw SimulationOverflow("simulate_closed: state overflow at step " + std::to_string(k + 1));
    run.states.push_back(x);
    check(x, k + 1);
  }
  return run;
}

namespace {

int dict_index(const MonomialBasis& basis, std::initializer_list<unsigned> exps) {
  Monomial m{std::vector<unsigned>(exps)};
  int idx = basis.index_of(m);
  if (idx < 0) throw std::logic_error("benchmark: monomial missing from dictionary");
  return idx;
}

RegionSpec standard_regions(const Box& initial) {
  RegionSpec r;
  r.state_box = Box::cube(3, -10.0, 10.0);
  r.initial_box = initial;
  r.unsafe_boxes = {Box::cube(3, -10.0, -6.0), Box::cube(3, 6.0, 10.0)};
  r.validate();
  return r;
}

}  // namespace

Benchmark benchmark(const std::string& name, const BenchmarkOverrides& ov) {
  const double tau = ov.tau;
  if (name == "lorenz") {
    MonomialBasis dict = make_dictionary(3, 2);  // x1,x2,x3,x1x2,x1x3,x2x3,x1^2,x2^2,x3^2
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, dict.size());
    a(0, dict_index(dict, {1, 0, 0})) = 1.0 - 10.0 * tau;
    a(0, dict_index(dict, {0, 1, 0})) = 10.0 * tau;
    a(1, dict_index(dict, {1, 0, 0})) = 28.0 * tau;
    a(1, dict_index(dict, {0, 1, 0})) = 1.0 - tau;
    a(1, dict_index(dict, {1, 1, 0})) = -tau;
    a(2, dict_index(dict, {0, 0, 1})) = 1.0 - 8.0 / 3.0 * tau;
    a(2, dict_index(dict, {1, 0, 1})) = tau;
    Eigen::MatrixXd b(3, 1);
    b << 0.0, tau, 0.0;
    NoiseSpec noise = NoiseSpec::gaussian(Eigen::VectorXd::Zero(3),
                                          0.006 * Eigen::MatrixXd::Identity(3, 3))
                          .with_bounds(Eigen::MatrixXd::Zero(3, 3),
                                       0.006 * Eigen::MatrixXd::Identity(3, 3));
    Box input_box = Box::cube(1, -ov.input_bound, ov.input_bound);
    SystemModel model(a, b, dict, PolyMatrix::identity(1, 3), noise, input_box);
    Box initial(Eigen::Vector3d(0.0, -1.5, -1.5), Eigen::Vector3d(1.5, 1.5, 1.5));
    return Benchmark{name, std::move(model), standard_regions(initial)};
  }
  if (name == "chen") {
    MonomialBasis dict = make_dictionary(3, 2);
    dict.entries.resize(6);  // x1,x2,x3,x1x2,x1x3,x2x3
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, dict.size());
    a(0, dict_index(dict, {1, 0, 0})) = 1.0 - 35.0 * tau;
    a(0, dict_index(dict, {0, 1, 0})) = 35.0 * tau;
    a(1, dict_index(dict, {1, 0, 0})) = -7.0 * tau;
    a(1, dict_index(dict, {0, 1, 0})) = 1.0 + 28.0 * tau;
    a(1, dict_index(dict, {1, 0, 1})) = -tau;
    a(2, dict_index(dict, {0, 0, 1})) = 1.0 - 3.0 * tau;
    a(2, dict_index(dict, {1, 1, 0})) = tau;
    Eigen::MatrixXd b(3, 1);
    b << 0.0, tau, 0.0;
    NoiseSpec noise = NoiseSpec::gaussian(Eigen::VectorXd::Zero(3),
                                          0.008 * Eigen::MatrixXd::Identity(3, 3))
                          .with_bounds(Eigen::MatrixXd::Zero(3, 3),
                                       0.008 * Eigen::MatrixXd::Identity(3, 3));
    Box input_box = Box::cube(1, -ov.input_bound, ov.input_bound);
    SystemModel model(a, b, dict, PolyMatrix::identity(1, 3), noise, input_box);
    return Benchmark{name, std::move(model), standard_regions(Box::cube(3, -1.0, 1.0))};
  }
  if (name == "spacecraft") {
    const double j1 = ov.inertias[0], j2 = ov.inertias[1], j3 = ov.inertias[2];
    MonomialBasis dict = make_dictionary(3, 2);
    dict.entries.resize(7);  // x1,x2,x3,x1x2,x1x3,x2x3,x1^2
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, dict.size());
    a(0, dict_index(dict, {1, 0, 0})) = 1.0;
    a(0, dict_index(dict, {0, 1, 1})) = tau * (j2 - j3) / j1;
    a(1, dict_index(dict, {0, 1, 0})) = 1.0;
    a(1, dict_index(dict, {1, 0, 1})) = tau * (j3 - j1) / j2;
    a(2, dict_index(dict, {0, 0, 1})) = 1.0;
    a(2, dict_index(dict, {1, 1, 0})) = tau * (j1 - j2) / j3;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
    b(0, 0) = tau / j1;
    b(1, 1) = tau / j2;
    b(2, 2) = tau / j3;
    NoiseSpec noise = NoiseSpec::gaussian(Eigen::VectorXd::Zero(3),
                                          0.0075 * Eigen::MatrixXd::Identity(3, 3))
                          .with_bounds(Eigen::MatrixXd::Zero(3, 3),
                                       0.0075 * Eigen::MatrixXd::Identity(3, 3));
    Box input_box = Box::cube(3, -ov.input_bound, ov.input_bound);
    SystemModel model(a, b, dict, PolyMatrix::identity(3, 3), noise, input_box);
    return Benchmark{name, std::move(model), standard_regions(Box::cube(3, -1.0, 1.0))};
  }
  throw std::invalid_argument("unknown benchmark: " + name);
}

}  // namespace scbc
