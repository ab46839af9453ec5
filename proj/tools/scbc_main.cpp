// Command-line front end: collect / certify / verify / report.
//
// Exit codes: 0 success, 2 config error, 3 simulation overflow,
// 4 no feasible synthesis point, 5 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "scbc/config.hpp"
#include "scbc/verify.hpp"

namespace fs = std::filesystem;
using namespace scbc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitOverflow = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitVerification = 5;

struct LoadedRun {
  RunConfig config;
  Benchmark bench;
};

LoadedRun load_run(const std::string& config_path) {
  RunConfig config = load_config_file(config_path);
  Benchmark bench = build_system(config, fs::path(config_path).parent_path());
  return {std::move(config), std::move(bench)};
}

Eigen::VectorXd initial_state(const LoadedRun& run) {
  return run.config.x0 ? *run.config.x0 : run.bench.regions.initial_box.midpoint();
}

int cmd_collect(const std::string& config_path, std::string out_dir) {
  LoadedRun run = load_run(config_path);
  if (out_dir.empty()) out_dir = run.config.output_dir;
  const SystemModel& model = run.bench.model;
  SeedStream stream(run.config.seed);
  Eigen::MatrixXd inputs = draw_input_sequence(model, run.config.data_horizon, stream);
  TrajectoryBatch batch =
      run_experiment(model, initial_state(run), inputs, run.config.samples, stream);
  fs::path dir = fs::path(out_dir) / "batch";
  save_batch(batch, dir);

  LiftedData lifted = lift(batch, model.f_basis(), model.g_poly());
  ExcitationReport exc = excitation_rank(lifted);
  SynthesisOptions opts = run.config.synthesis_options();
  double eps = opts.epsilon ? *opts.epsilon
                            : epsilon_for_confidence(batch.realizations(),
                                                     opts.beta2bar_target > 0.0
                                                         ? opts.beta2bar_target
                                                         : 0.01 / batch.horizon(),
                                                     model.noise().gamma_sigma(),
                                                     model.noise().gamma_mu());
  const double b2 = confidence_beta2bar(batch.realizations(), eps, model.noise().gamma_sigma(),
                                        model.noise().gamma_mu());
  std::cout << "collected N=" << batch.realizations() << " T=" << batch.horizon()
            << " -> " << dir.string() << "\n";
  std::cout << "excitation: stacked rank " << exc.stacked_rank << "/" << exc.full_rank
            << (exc.stacked_full() ? "" : "  [warning: lifted data not full rank]") << "\n";
  std::cout << "epsilon=" << eps << "  beta2bar=" << b2 << "\n";
  if (!exc.stacked_full())
    std::cerr << "warning: stacked lifted rank " << exc.stacked_rank << " < " << exc.full_rank
              << "; the conformity constraints may be uninformative\n";
  return 0;
}

int cmd_certify(const std::string& config_path, const std::string& batch_dir, std::string out_dir) {
  LoadedRun run = load_run(config_path);
  if (out_dir.empty()) out_dir = run.config.output_dir;
  const SystemModel& model = run.bench.model;
  TrajectoryBatch batch = load_batch(batch_dir.empty() ? fs::path(run.config.output_dir) / "batch"
                                                       : fs::path(batch_dir));
  SynthesisOptions opts = run.config.synthesis_options();
  SynthesisOutcome outcome =
      synthesize(batch, model.f_basis(), model.g_poly(), run.bench.regions,
                 model.noise().gamma_mu(), model.noise().gamma_sigma(), opts);

  fs::create_directories(out_dir);
  std::ofstream report(fs::path(out_dir) / "certify_report.txt");
  report << "mode: " << (opts.mode == ConformityMode::Robust ? "robust" : "stochastic") << "\n";
  report << "epsilon: " << outcome.epsilon_used << "\n";
  report << "beta2bar: " << outcome.setup.beta2bar << "\n";
  report << "excitation stacked rank: " << outcome.excitation.stacked_rank << "/"
         << outcome.excitation.full_rank << "\n";
  report << "grid:\n";
  for (const auto& entry : outcome.grid) {
    report << "  kappa=" << entry.kappa << " rho=" << entry.rho << " -> "
           << to_string(entry.status);
    if (entry.status == SolveStatus::Optimal && entry.note.empty())
      report << " beta1=" << entry.beta1;
    if (!entry.note.empty()) report << " (" << entry.note << ")";
    report << "\n";
  }

  for (const auto& entry : outcome.grid) {
    std::cout << "kappa=" << entry.kappa << " rho=" << entry.rho << " -> "
              << to_string(entry.status)
              << (entry.note.empty() ? "" : " (" + entry.note + ")") << "\n";
  }
  if (!outcome.feasible()) {
    report << "verdict: no feasible synthesis point\n";
    std::cerr << "no feasible certificate over the (kappa, rho) grid\n";
    return kExitInfeasible;
  }
  const Certificate& cert = *outcome.best;
  std::ofstream(fs::path(out_dir) / "certificate.json") << cert.to_json_string() << "\n";
  report << "certificate: kappa=" << cert.kappa << " rho=" << cert.rho << " eta=" << cert.eta
         << " delta=" << cert.delta << " psi=" << cert.psi << " beta1=" << cert.beta1
         << " (" << cert.beta1_branch << ") beta2=" << cert.beta2 << "\n";
  report << cert.guarantee_line() << "\n";
  std::cout << cert.guarantee_line() << "\n";
  std::cout << "certificate written to " << (fs::path(out_dir) / "certificate.json").string()
            << "\n";
  return 0;
}

int cmd_verify(const std::string& config_path, const std::string& cert_path, std::string out_dir) {
  LoadedRun run = load_run(config_path);
  if (out_dir.empty()) out_dir = run.config.output_dir;
  std::ifstream is(cert_path);
  if (!is) throw std::runtime_error("cannot open certificate " + cert_path);
  std::stringstream buf;
  buf << is.rdbuf();
  Certificate cert = Certificate::from_json_string(buf.str());
  if (!cert.ok()) throw std::invalid_argument("certificate status is '" + cert.status + "'");

  VerificationReport rep =
      run_verification(run.bench.model, cert, run.bench.regions, run.config.grid_points,
                       run.config.mc_runs, SeedStream(run.config.seed).sub("verify"));
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "verification.json") << rep.to_json_string() << "\n";
  std::cout << "martingale margin: " << rep.martingale_margin
            << (rep.martingale_pass ? " (pass)" : " (FAIL)") << "\n";
  std::cout << "level margins: eta " << rep.levels.eta_margin << ", delta "
            << rep.levels.delta_margin << (rep.levels_pass ? " (pass)" : " (FAIL)") << "\n";
  std::cout << "monte carlo: " << rep.mc.safe << "/" << rep.mc.runs
            << " safe, wilson lower " << rep.mc.wilson_lower << " vs required "
            << 1.0 - cert.beta1 << (rep.mc.pass ? " (pass)" : " (FAIL)") << "\n";
  return rep.all_pass ? 0 : kExitVerification;
}

void write_box_csv(const fs::path& path, const Box& box) {
  std::ofstream os(path);
  os << "bound";
  for (int i = 0; i < box.dim(); ++i) os << ",x" << (i + 1);
  os << "\nlo";
  for (int i = 0; i < box.dim(); ++i) os << "," << box.lo[i];
  os << "\nhi";
  for (int i = 0; i < box.dim(); ++i) os << "," << box.hi[i];
  os << "\n";
}

void write_level_surface(const fs::path& path, const Eigen::MatrixXd& p, double level) {
  std::ofstream os(path);
  const int n = static_cast<int>(p.rows());
  if (n == 2) {
    os << "x1,x2\n";
    const int steps = 256;
    for (int i = 0; i <= steps; ++i) {
      const double a = 2.0 * M_PI * i / steps;
      Eigen::Vector2d dir(std::cos(a), std::sin(a));
      const double r = std::sqrt(level / dir.dot(p * dir));
      os << r * dir[0] << "," << r * dir[1] << "\n";
    }
    return;
  }
  if (n == 3) {
    os << "x1,x2,x3\n";
    const int nth = 48, nph = 96;
    for (int i = 0; i <= nth; ++i) {
      const double th = M_PI * i / nth;
      for (int j = 0; j < nph; ++j) {
        const double ph = 2.0 * M_PI * j / nph;
        Eigen::Vector3d dir(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                            std::cos(th));
        const double r = std::sqrt(level / dir.dot(p * dir));
        os << r * dir[0] << "," << r * dir[1] << "," << r * dir[2] << "\n";
      }
    }
    return;
  }
  os << "# level surface emission implemented for n = 2 and 3 only\n";
}

int cmd_report(const std::string& config_path, const std::string& cert_path, int trajectories,
               std::string out_dir) {
  LoadedRun run = load_run(config_path);
  if (out_dir.empty()) out_dir = run.config.output_dir;
  fs::path dir = fs::path(out_dir) / "plots";
  fs::create_directories(dir);
  nlohmann::json manifest;

  write_box_csv(dir / "initial_box.csv", run.bench.regions.initial_box);
  manifest["initial_box.csv"] = "initial region box (rows lo/hi per axis)";
  for (size_t i = 0; i < run.bench.regions.unsafe_boxes.size(); ++i) {
    char name[40];
    std::snprintf(name, sizeof(name), "unsafe_box_%zu.csv", i);
    write_box_csv(dir / name, run.bench.regions.unsafe_boxes[i]);
    manifest[name] = "unsafe region box (rows lo/hi per axis)";
  }
  write_box_csv(dir / "state_box.csv", run.bench.regions.state_box);
  manifest["state_box.csv"] = "state set box";

  if (!cert_path.empty()) {
    std::ifstream is(cert_path);
    if (!is) throw std::runtime_error("cannot open certificate " + cert_path);
    std::stringstream buf;
    buf << is.rdbuf();
    Certificate cert = Certificate::from_json_string(buf.str());
    write_level_surface(dir / "eta_surface.csv", cert.p, cert.eta);
    manifest["eta_surface.csv"] = "level surface B(x) = eta";
    write_level_surface(dir / "delta_surface.csv", cert.p, cert.delta);
    manifest["delta_surface.csv"] = "level surface B(x) = delta";

    SeedStream stream(run.config.seed);
    const Box& init = run.bench.regions.initial_box;
    for (int t = 0; t < trajectories; ++t) {
      Rng rng(stream.sub("report-init").at(t));
      Eigen::VectorXd x0(init.dim());
      for (int i = 0; i < init.dim(); ++i) x0[i] = rng.uniform(init.lo[i], init.hi[i]);
      char name[40];
      std::snprintf(name, sizeof(name), "trajectory_%03d.csv", t);
      std::ofstream os(dir / name);
      os << "k";
      for (int i = 0; i < run.bench.model.state_dim(); ++i) os << ",x" << (i + 1);
      for (int i = 0; i < run.bench.model.input_dim(); ++i) os << ",u" << (i + 1);
      os << "\n";
      try {
        auto res = run.bench.model.simulate_closed(cert.controller, x0, cert.horizon,
                                                   stream.sub("report-noise").at(t),
                                                   run.bench.regions.unsafe_boxes);
        for (size_t k = 0; k < res.states.size(); ++k) {
          os << k;
          for (int i = 0; i < run.bench.model.state_dim(); ++i) os << "," << res.states[k][i];
          Eigen::VectorXd u = cert.controller.control(res.states[k]);
          for (int i = 0; i < u.size(); ++i) os << "," << u[i];
          os << "\n";
        }
      } catch (const SimulationOverflow&) {
        os << "# overflow\n";
      }
      manifest[name] = "closed-loop sample trajectory";
    }
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  std::cout << "plot bundle written to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven stochastic barrier certificate toolkit"};
  app.require_subcommand(1);

  std::string config_path, batch_dir, cert_path, out_dir;
  int trajectories = 10;

  auto* collect = app.add_subcommand("collect", "run the multi-realization experiment");
  collect->add_option("--config", config_path, "run configuration (TOML)")->required();
  collect->add_option("--out", out_dir, "output directory (default from config)");

  auto* certify = app.add_subcommand("certify", "synthesize a certificate from a batch");
  certify->add_option("--config", config_path, "run configuration (TOML)")->required();
  certify->add_option("--batch", batch_dir, "batch archive directory");
  certify->add_option("--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "validate a certificate against the true model");
  verify->add_option("--config", config_path, "run configuration (TOML)")->required();
  verify->add_option("--certificate", cert_path, "certificate JSON")->required();
  verify->add_option("--out", out_dir, "output directory");

  auto* report = app.add_subcommand("report", "emit plot-data CSV bundle");
  report->add_option("--config", config_path, "run configuration (TOML)")->required();
  report->add_option("--certificate", cert_path, "certificate JSON");
  report->add_option("--trajectories", trajectories, "number of sample trajectories");
  report->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (collect->parsed()) return cmd_collect(config_path, out_dir);
    if (certify->parsed()) return cmd_certify(config_path, batch_dir, out_dir);
    if (verify->parsed()) return cmd_verify(config_path, cert_path, out_dir);
    if (report->parsed()) return cmd_report(config_path, cert_path, trajectories, out_dir);
  } catch (const SimulationOverflow& e) {
    std::cerr << "simulation overflow: " << e.what() << "\n";
    return kExitOverflow;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
