#include "scbc/collect.hpp"

#include <json.hpp>

#include <Eigen/SVD>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace scbc {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      row.push_back(std::stod(line.substr(pos, next - pos)));
      pos = next + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw std::runtime_error("ragged CSV: " + path.string());
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void hash_bytes(uint64_t& h, const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
}

void hash_matrix(uint64_t& h, const Eigen::MatrixXd& m) {
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r) {
      double v = m(r, c);
      hash_bytes(h, &v, sizeof(v));
    }
}

}  // namespace

TrajectoryBatch::TrajectoryBatch(Eigen::VectorXd x0, Eigen::MatrixXd inputs,
                                 std::vector<Eigen::MatrixXd> xplus,
                                 std::vector<Eigen::MatrixXd> xpast,
                                 std::vector<Eigen::MatrixXd> noise, uint64_t seed)
    : x0_(std::move(x0)),
      inputs_(std::move(inputs)),
      xplus_(std::move(xplus)),
      xpast_(std::move(xpast)),
      noise_(std::move(noise)),
      seed_(seed) {
  if (xplus_.size() != xpast_.size() || xplus_.size() != noise_.size())
    throw std::invalid_argument("TrajectoryBatch: realization count mismatch");
  for (const auto& m : xplus_)
    if (m.cols() != inputs_.cols() || m.rows() != x0_.size())
      throw std::invalid_argument("TrajectoryBatch: xplus shape mismatch");
}

const std::vector<Eigen::MatrixXd>& TrajectoryBatch::recorded_noise_oracle() const {
  audit::oracle_counter().fetch_add(1);
  return noise_;
}

std::string TrajectoryBatch::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  hash_matrix(h, x0_);
  hash_matrix(h, inputs_);
  for (const auto& m : xplus_) hash_matrix(h, m);
  for (const auto& m : xpast_) hash_matrix(h, m);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

TrajectoryBatch run_experiment(const SystemModel& model, const Eigen::VectorXd& x0,
                               const Eigen::MatrixXd& inputs, int realizations, SeedStream stream) {
  if (realizations < 1) throw std::invalid_argument("run_experiment: need at least one realization");
  if (inputs.cols() < 1) throw std::invalid_argument("run_experiment: need at least one input column");
  if (inputs.rows() != model.input_dim())
    throw std::invalid_argument("run_experiment: input row count mismatch");
  const int n = model.state_dim();
  const int horizon = static_cast<int>(inputs.cols());
  std::vector<Eigen::MatrixXd> xplus, xpast, noise;
  xplus.reserve(realizations);
  SeedStream traj = stream.sub("traj");
  for (int i = 0; i < realizations; ++i) {
    auto run = model.simulate_open(x0, inputs, traj.at(i));
    Eigen::MatrixXd xp(n, horizon), xm(n, horizon), z(n, horizon);
    for (int k = 0; k < horizon; ++k) {
      xm.col(k) = run.states[k];
      xp.col(k) = run.states[k + 1];
      z.col(k) = run.noise[k];
    }
    xplus.push_back(std::move(xp));
    xpast.push_back(std::move(xm));
    noise.push_back(std::move(z));
  }
  return TrajectoryBatch(x0, inputs, std::move(xplus), std::move(xpast), std::move(noise),
                         stream.seed);
}

Eigen::MatrixXd draw_input_sequence(const SystemModel& model, int horizon, SeedStream stream) {
  if (horizon < 1) throw std::invalid_argument("draw_input_sequence: horizon must be >= 1");
  Rng rng(stream.sub("input"));
  const Box& box = model.input_box();
  Eigen::MatrixXd u(model.input_dim(), horizon);
  for (int k = 0; k < horizon; ++k)
    for (int r = 0; r < model.input_dim(); ++r) u(r, k) = rng.uniform(box.lo[r], box.hi[r]);
  return u;
}

LiftedData lift(const TrajectoryBatch& batch, const MonomialBasis& f_basis,
                const PolyMatrix& g_poly) {
  if (f_basis.vars != batch.state_dim()) throw std::invalid_argument("lift: dictionary dimension");
  if (g_poly.cols() != batch.input_dim()) throw std::invalid_argument("lift: G(x) column count");
  LiftedData out;
  out.l = f_basis.size();
  out.q = g_poly.rows();
  const int horizon = batch.horizon();
  for (int i = 0; i < batch.realizations(); ++i) {
    const Eigen::MatrixXd& xm = batch.xpast()[i];
    Eigen::MatrixXd f(out.l, horizon), g(out.q, horizon), h(out.l + out.q, horizon);
    for (int k = 0; k < horizon; ++k) {
      f.col(k) = f_basis.eval(xm.col(k));
      g.col(k) = g_poly.eval(xm.col(k)) * batch.inputs().col(k);
      h.col(k) << f.col(k), g.col(k);
    }
    out.F.push_back(std::move(f));
    out.G.push_back(std::move(g));
    out.H.push_back(std::move(h));
  }
  return out;
}

ExcitationReport excitation_rank(const LiftedData& lifted) {
  if (lifted.H.empty()) throw std::invalid_argument("excitation_rank: empty lifted data");
  const int d = lifted.l + lifted.q;
  const int horizon = lifted.horizon();
  const double n_inv = 1.0 / lifted.realizations();
  ExcitationReport report;
  report.full_rank = d;
  auto rank_of = [](const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] <= 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-8 * sv[0]) ++r;
    return r;
  };
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < horizon; ++j) {
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < lifted.realizations(); ++i) {
      const auto col = lifted.H[i].col(j);
      second.noalias() += n_inv * col * col.transpose();
    }
    total += second;
    report.per_step_rank.push_back(rank_of(second));
  }
  report.stacked_rank = rank_of(total);
  return report;
}

void save_batch(const TrajectoryBatch& batch, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["realizations"] = batch.realizations();
  manifest["horizon"] = batch.horizon();
  manifest["state_dim"] = batch.state_dim();
  manifest["input_dim"] = batch.input_dim();
  manifest["seed"] = batch.seed();
  manifest["content_hash"] = batch.content_hash();
  manifest["x0"] = std::vector<double>(batch.x0().data(), batch.x0().data() + batch.x0().size());
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(2) << '\n';
  write_csv(dir / "inputs.csv", batch.inputs());
  const auto& noise = batch.recorded_noise_oracle();
  for (int i = 0; i < batch.realizations(); ++i) {
    char name[40];
    std::snprintf(name, sizeof(name), "real_%05d.csv", i);
    // per-realization rows: k, xpast, xplus, noise
    const int n = batch.state_dim();
    Eigen::MatrixXd block(batch.horizon(), 1 + 3 * n);
    for (int k = 0; k < batch.horizon(); ++k) {
      block(k, 0) = k;
      block.row(k).segment(1, n) = batch.xpast()[i].col(k).transpose();
      block.row(k).segment(1 + n, n) = batch.xplus()[i].col(k).transpose();
      block.row(k).segment(1 + 2 * n, n) = noise[i].col(k).transpose();
    }
    write_csv(dir / name, block);
  }
}

TrajectoryBatch load_batch(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw std::runtime_error("cannot read batch manifest in " + dir.string());
  json manifest = json::parse(is);
  const int realizations = manifest.at("realizations").get<int>();
  const int horizon = manifest.at("horizon").get<int>();
  const int n = manifest.at("state_dim").get<int>();
  auto x0v = manifest.at("x0").get<std::vector<double>>();
  Eigen::VectorXd x0 = Eigen::Map<Eigen::VectorXd>(x0v.data(), x0v.size());
  Eigen::MatrixXd inputs = read_csv(dir / "inputs.csv");
  std::vector<Eigen::MatrixXd> xplus, xpast, noise;
  for (int i = 0; i < realizations; ++i) {
    char name[40];
    std::snprintf(name, sizeof(name), "real_%05d.csv", i);
    Eigen::MatrixXd block = read_csv(dir / name);
    if (block.rows() != horizon || block.cols() != 1 + 3 * n)
      throw std::runtime_error("batch archive: bad realization file shape");
    Eigen::MatrixXd xp(n, horizon), xm(n, horizon), z(n, horizon);
    for (int k = 0; k < horizon; ++k) {
      xm.col(k) = block.row(k).segment(1, n).transpose();
      xp.col(k) = block.row(k).segment(1 + n, n).transpose();
      z.col(k) = block.row(k).segment(1 + 2 * n, n).transpose();
    }
    xpast.push_back(std::move(xm));
    xplus.push_back(std::move(xp));
    noise.push_back(std::move(z));
  }
  TrajectoryBatch batch(std::move(x0), std::move(inputs), std::move(xplus), std::move(xpast),
                        std::move(noise), manifest.at("seed").get<uint64_t>());
  const std::string expected = manifest.at("content_hash").get<std::string>();
  if (batch.content_hash() != expected)
    throw std::runtime_error("batch archive: content hash mismatch (corrupt or edited archive)");
  return batch;
}

}  // namespace scbc
