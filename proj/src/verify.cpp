#include "scbc/verify.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace scbc {

namespace {

// Iterates a uniform grid over a box, invoking f at every point.
template <typename F>
void for_grid(const Box& box, int points, F&& f) {
  const int n = box.dim();
  std::vector<int> idx(n, 0);
  Eigen::VectorXd x(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      x[i] = points == 1 ? box.midpoint()[i]
                         : box.lo[i] + (box.hi[i] - box.lo[i]) * idx[i] / (points - 1);
    }
    f(x);
    int i = 0;
    while (i < n && ++idx[i] == points) idx[i++] = 0;
    if (i == n) break;
  }
}

}  // namespace

double check_martingale(const SystemModel& model, const Certificate& cert, const Box& state_box,
                        int grid_points_per_axis) {
  const Eigen::MatrixXd& a = model.system_matrix_oracle();
  const Eigen::MatrixXd& b = model.input_matrix_oracle();
  const Eigen::VectorXd mu = model.noise().mean();
  const Eigen::MatrixXd sigma = model.noise().covariance();
  const double trace_term = (cert.p * sigma).trace();
  double worst = -std::numeric_limits<double>::infinity();
  for_grid(state_box, grid_points_per_axis, [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd u = cert.controller.control(x);
    const Eigen::VectorXd drift = a * model.f_basis().eval(x) + b * (model.g_poly().eval(x) * u);
    const Eigen::VectorXd shifted = drift + mu;
    const double expected_next = shifted.dot(cert.p * shifted) + trace_term;
    const double margin = expected_next - cert.kappa * x.dot(cert.p * x) - cert.psi;
    worst = std::max(worst, margin);
  });
  return worst;
}

LevelMargins check_levels(const Certificate& cert, const RegionSpec& regions,
                          int grid_points_per_axis) {
  LevelMargins m;
  double max_initial = -std::numeric_limits<double>::infinity();
  for_grid(regions.initial_box, grid_points_per_axis,
           [&](const Eigen::VectorXd& x) { max_initial = std::max(max_initial, x.dot(cert.p * x)); });
  m.eta_margin = cert.eta - max_initial;
  double min_unsafe = std::numeric_limits<double>::infinity();
  for (const auto& box : regions.unsafe_boxes)
    for_grid(box, grid_points_per_axis,
             [&](const Eigen::VectorXd& x) { min_unsafe = std::min(min_unsafe, x.dot(cert.p * x)); });
  m.delta_margin = min_unsafe - cert.delta;
  return m;
}

McResult mc_safety(const SystemModel& model, const Certificate& cert, const RegionSpec& regions,
                   int horizon, int runs, SeedStream stream, double slack) {
  if (runs < 1000) throw std::invalid_argument("mc_safety: need at least 1000 runs");
  McResult r;
  r.runs = runs;
  SeedStream inits = stream.sub("mc-init");
  SeedStream noise = stream.sub("mc-noise");
  const Box& init = regions.initial_box;
  for (int run = 0; run < runs; ++run) {
    Rng rng(inits.at(run));
    Eigen::VectorXd x0(init.dim());
    for (int i = 0; i < init.dim(); ++i) x0[i] = rng.uniform(init.lo[i], init.hi[i]);
    bool safe = true;
    try {
      auto res = model.simulate_closed(cert.controller, x0, horizon, noise.at(run),
                                       regions.unsafe_boxes);
      safe = !res.entered_unsafe;
    } catch (const SimulationOverflow&) {
      safe = false;
    }
    if (safe) ++r.safe;
  }
  r.fraction = static_cast<double>(r.safe) / runs;
  // Wilson one-sided lower bound at confidence 0.999
  const double z = 3.090232306167813;
  const double z2 = z * z;
  const double phat = r.fraction;
  r.wilson_lower = (phat + z2 / (2.0 * runs) -
                    z * std::sqrt(phat * (1.0 - phat) / runs + z2 / (4.0 * runs * runs))) /
                   (1.0 + z2 / runs);
  r.pass = r.wilson_lower >= 1.0 - cert.beta1 - slack;
  return r;
}

double lemma1_frequency(const NoiseSpec& noise, int realizations, double epsilon, int repetitions,
                        SeedStream stream) {
  if (repetitions < 1000) throw std::invalid_argument("lemma1_frequency: need >= 1000 repetitions");
  if (realizations < 1 || epsilon <= 0.0)
    throw std::invalid_argument("lemma1_frequency: bad arguments");
  const Eigen::MatrixXd m2 = noise.true_second_moment();
  const int n = noise.dim();
  int violations = 0;
  SeedStream reps = stream.sub("lemma1");
  for (int rep = 0; rep < repetitions; ++rep) {
    Rng rng(reps.at(rep));
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < realizations; ++i) {
      const Eigen::VectorXd z = noise.sample(rng);
      acc.noalias() += z * z.transpose();
    }
    acc /= realizations;
    if ((acc - m2).norm() >= epsilon) ++violations;
  }
  return static_cast<double>(violations) / repetitions;
}

std::string VerificationReport::to_json_string() const {
  nlohmann::json j;
  j["grid_points"] = grid_points;
  j["martingale_margin"] = martingale_margin;
  j["martingale_pass"] = martingale_pass;
  j["eta_margin"] = levels.eta_margin;
  j["delta_margin"] = levels.delta_margin;
  j["levels_pass"] = levels_pass;
  j["mc"] = {{"runs", mc.runs},
             {"safe", mc.safe},
             {"fraction", mc.fraction},
             {"wilson_lower", mc.wilson_lower},
             {"pass", mc.pass}};
  j["all_pass"] = all_pass;
  return j.dump(2);
}

VerificationReport run_verification(const SystemModel& model, const Certificate& cert,
                                    const RegionSpec& regions, int grid_points, int mc_runs,
                                    SeedStream stream, double martingale_tolerance) {
  VerificationReport rep;
  rep.grid_points = grid_points;
  rep.martingale_margin = check_martingale(model, cert, regions.state_box, grid_points);
  rep.martingale_pass = rep.martingale_margin <= martingale_tolerance;
  rep.levels = check_levels(cert, regions, grid_points);
  rep.levels_pass = rep.levels.eta_margin >= -1e-9 && rep.levels.delta_margin >= -1e-9;
  rep.mc = mc_safety(model, cert, regions, cert.horizon, mc_runs, stream);
  rep.all_pass = rep.martingale_pass && rep.levels_pass && rep.mc.pass;
  return rep;
}

}  // namespace scbc
