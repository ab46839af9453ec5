#include "scbc/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scbc {

namespace toml {

Value Value::of(bool b) {
  Value v;
  v.type = Type::Boolean;
  v.boolean = b;
  return v;
}
Value Value::of(double d) {
  Value v;
  v.type = Type::Number;
  v.number = d;
  return v;
}
Value Value::of(const std::string& s) {
  Value v;
  v.type = Type::String;
  v.text = s;
  return v;
}
Value Value::of(std::vector<Value> a) {
  Value v;
  v.type = Type::Array;
  v.array = std::move(a);
  return v;
}

double Value::as_number() const {
  if (type != Type::Number) throw std::invalid_argument("config: expected a number");
  return number;
}
bool Value::as_bool() const {
  if (type != Type::Boolean) throw std::invalid_argument("config: expected a boolean");
  return boolean;
}
const std::string& Value::as_string() const {
  if (type != Type::String) throw std::invalid_argument("config: expected a string");
  return text;
}
const std::vector<Value>& Value::as_array() const {
  if (type != Type::Array) throw std::invalid_argument("config: expected an array");
  return array;
}
std::vector<double> Value::as_numbers() const {
  std::vector<double> out;
  for (const auto& v : as_array()) out.push_back(v.as_number());
  return out;
}

namespace {

struct Cursor {
  const std::string& s;
  size_t pos = 0;

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  void skip_space() {
    while (!done() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r')) ++pos;
  }
};

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
  std::vector<Value> items;
  ++c.pos;  // '['
  while (true) {
    c.skip_space();
    if (c.done()) throw std::invalid_argument("config: unterminated array");
    if (c.peek() == ']') {
      ++c.pos;
      break;
    }
    items.push_back(parse_value(c));
    c.skip_space();
    if (!c.done() && c.peek() == ',') ++c.pos;
  }
  return Value::of(std::move(items));
}

Value parse_value(Cursor& c) {
  c.skip_space();
  if (c.done()) throw std::invalid_argument("config: missing value");
  const char ch = c.peek();
  if (ch == '[') return parse_array(c);
  if (ch == '"') {
    ++c.pos;
    std::string out;
    while (!c.done() && c.peek() != '"') {
      if (c.peek() == '\\' && c.pos + 1 < c.s.size()) ++c.pos;
      out.push_back(c.s[c.pos++]);
    }
    if (c.done()) throw std::invalid_argument("config: unterminated string");
    ++c.pos;
    return Value::of(out);
  }
  size_t start = c.pos;
  while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '\n' && c.peek() != '#')
    ++c.pos;
  std::string tok = c.s.substr(start, c.pos - start);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r'))
    tok.pop_back();
  if (tok == "true") return Value::of(true);
  if (tok == "false") return Value::of(false);
  try {
    size_t used = 0;
    const double num = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing");
    return Value::of(num);
  } catch (...) {
    throw std::invalid_argument("config: cannot parse value '" + tok + "'");
  }
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

int bracket_balance(const std::string& s) {
  int bal = 0;
  bool in_string = false;
  for (char ch : s) {
    if (ch == '"') in_string = !in_string;
    if (in_string) continue;
    if (ch == '[') ++bal;
    if (ch == ']') --bal;
  }
  return bal;
}

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::string section;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config: malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      table[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: expected key = value: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value_text = trim(line.substr(eq + 1));
    // multi-line arrays: keep reading until brackets balance
    while (bracket_balance(value_text) > 0) {
      std::string more;
      if (!std::getline(is, more)) throw std::invalid_argument("config: unterminated array");
      value_text += " " + trim(strip_comment(more));
    }
    Cursor c{value_text, 0};
    table[section][key] = parse_value(c);
    c.skip_space();
    if (!c.done()) throw std::invalid_argument("config: trailing content after value of " + key);
  }
  return table;
}

namespace {

void serialize_value(std::ostream& os, const Value& v) {
  switch (v.type) {
    case Value::Type::Boolean:
      os << (v.boolean ? "true" : "false");
      return;
    case Value::Type::Number: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v.number);
      os << buf;
      return;
    }
    case Value::Type::String:
      os << '"' << v.text << '"';
      return;
    case Value::Type::Array:
      os << '[';
      for (size_t i = 0; i < v.array.size(); ++i) {
        if (i) os << ", ";
        serialize_value(os, v.array[i]);
      }
      os << ']';
      return;
  }
}

}  // namespace

std::string serialize(const Table& table) {
  std::ostringstream os;
  for (const auto& [section, entries] : table) {
    os << '[' << section << "]\n";
    for (const auto& [key, value] : entries) {
      os << key << " = ";
      serialize_value(os, value);
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace toml

namespace {

Eigen::VectorXd to_vector(const toml::Value& v) {
  auto nums = v.as_numbers();
  return Eigen::Map<Eigen::VectorXd>(nums.data(), nums.size());
}

Eigen::MatrixXd to_matrix(const toml::Value& v) {
  const auto& rows = v.as_array();
  const int r = static_cast<int>(rows.size());
  if (r == 0) return Eigen::MatrixXd(0, 0);
  const int c = static_cast<int>(rows[0].as_array().size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    auto nums = rows[i].as_numbers();
    if (static_cast<int>(nums.size()) != c)
      throw std::invalid_argument("config: ragged matrix rows");
    for (int j = 0; j < c; ++j) m(i, j) = nums[j];
  }
  return m;
}

Box to_box(const toml::Value& v) {
  // [[lo1, hi1], [lo2, hi2], ...]
  const auto& rows = v.as_array();
  Eigen::VectorXd lo(rows.size()), hi(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    auto pair = rows[i].as_numbers();
    if (pair.size() != 2) throw std::invalid_argument("config: box rows need [lo, hi]");
    lo[i] = pair[0];
    hi[i] = pair[1];
  }
  return Box(lo, hi);
}

toml::Value from_vector(const Eigen::VectorXd& v) {
  std::vector<toml::Value> items;
  for (int i = 0; i < v.size(); ++i) items.push_back(toml::Value::of(v[i]));
  return toml::Value::of(std::move(items));
}

toml::Value from_matrix(const Eigen::MatrixXd& m) {
  std::vector<toml::Value> rows;
  for (int r = 0; r < m.rows(); ++r) {
    std::vector<toml::Value> row;
    for (int c = 0; c < m.cols(); ++c) row.push_back(toml::Value::of(m(r, c)));
    rows.push_back(toml::Value::of(std::move(row)));
  }
  return toml::Value::of(std::move(rows));
}

toml::Value from_box(const Box& b) {
  std::vector<toml::Value> rows;
  for (int i = 0; i < b.dim(); ++i) {
    std::vector<toml::Value> pair{toml::Value::of(b.lo[i]), toml::Value::of(b.hi[i])};
    rows.push_back(toml::Value::of(std::move(pair)));
  }
  return toml::Value::of(std::move(rows));
}

toml::Value from_numbers(const std::vector<double>& v) {
  std::vector<toml::Value> items;
  for (double d : v) items.push_back(toml::Value::of(d));
  return toml::Value::of(std::move(items));
}

}  // namespace

SynthesisOptions RunConfig::synthesis_options() const {
  SynthesisOptions o;
  o.kappas = kappas;
  o.rhos = rhos;
  o.degrees.k_degree = k_degree;
  o.degrees.alpha_degree = alpha_degree;
  o.degrees.gram_half_degree = gram_half_degree;
  o.floors.pbar_min_eig = pbar_min_eig;
  o.floors.margin_scale = margin_scale;
  o.floors.trace_target = trace_target;
  o.assemble.domain = sos_domain == "global" ? SosDomain::Global : SosDomain::StateBox;
  o.assemble.literal_levels = literal_levels;
  o.epsilon = epsilon;
  o.beta2bar_target = beta2bar_target;
  o.mode = mode == "robust" ? ConformityMode::Robust : ConformityMode::Stochastic;
  o.varkappa = varkappa;
  o.safety_horizon = safety_horizon;
  o.solver.tolerance = solver_tol;
  o.solver.max_iterations = max_iterations;
  return o;
}

RunConfig parse_config(const std::string& text) {
  toml::Table t = toml::parse(text);
  RunConfig c;
  auto get = [&](const std::string& sec, const std::string& key) -> const toml::Value* {
    auto si = t.find(sec);
    if (si == t.end()) return nullptr;
    auto ki = si->second.find(key);
    return ki == si->second.end() ? nullptr : &ki->second;
  };

  if (auto* v = get("system", "benchmark")) c.benchmark = v->as_string();
  if (auto* v = get("system", "tau")) c.tau = v->as_number();
  if (auto* v = get("system", "inertias")) {
    auto nums = v->as_numbers();
    if (nums.size() != 3) throw std::invalid_argument("config: inertias need three values");
    c.inertias = Eigen::Vector3d(nums[0], nums[1], nums[2]);
  }
  if (auto* v = get("system", "input_bound")) c.input_bound = v->as_number();
  if (auto* v = get("system", "input_box")) c.input_box = to_box(*v);
  if (auto* v = get("system", "a_matrix")) c.a_matrix = to_matrix(*v);
  if (auto* v = get("system", "b_matrix")) c.b_matrix = to_matrix(*v);
  if (auto* v = get("system", "dictionary_file")) c.dictionary_file = v->as_string();

  if (auto* v = get("noise", "kind")) c.noise_kind = v->as_string();
  if (auto* v = get("noise", "mean")) c.noise_mean = to_vector(*v);
  if (auto* v = get("noise", "covariance")) c.noise_cov = to_matrix(*v);
  if (auto* v = get("noise", "lo")) c.noise_lo = to_vector(*v);
  if (auto* v = get("noise", "hi")) c.noise_hi = to_vector(*v);
  if (auto* v = get("noise", "gamma_mu")) c.gamma_mu = to_matrix(*v);
  if (auto* v = get("noise", "gamma_sigma")) c.gamma_sigma = to_matrix(*v);

  if (get("regions", "state_box")) {
    RegionSpec r;
    r.state_box = to_box(*get("regions", "state_box"));
    if (auto* v = get("regions", "initial_box")) r.initial_box = to_box(*v);
    if (auto* v = get("regions", "unsafe_boxes"))
      for (const auto& item : v->as_array()) r.unsafe_boxes.push_back(to_box(item));
    if (auto* v = get("regions", "z_eta")) r.z_eta = to_vector(*v);
    if (auto* v = get("regions", "z_delta")) r.z_delta = to_vector(*v);
    r.validate();
    c.regions = std::move(r);
  }

  if (auto* v = get("experiment", "samples")) c.samples = static_cast<int>(v->as_number());
  if (auto* v = get("experiment", "horizon")) c.data_horizon = static_cast<int>(v->as_number());
  if (auto* v = get("experiment", "seed")) c.seed = static_cast<uint64_t>(v->as_number());
  if (auto* v = get("experiment", "x0")) c.x0 = to_vector(*v);

  if (auto* v = get("synthesis", "kappa")) c.kappas = v->as_numbers();
  if (auto* v = get("synthesis", "rho")) c.rhos = v->as_numbers();
  if (auto* v = get("synthesis", "k_degree")) c.k_degree = static_cast<int>(v->as_number());
  if (auto* v = get("synthesis", "alpha_degree")) c.alpha_degree = static_cast<int>(v->as_number());
  if (auto* v = get("synthesis", "gram_half_degree"))
    c.gram_half_degree = static_cast<int>(v->as_number());
  if (auto* v = get("synthesis", "epsilon")) c.epsilon = v->as_number();
  if (auto* v = get("synthesis", "beta2bar_target")) c.beta2bar_target = v->as_number();
  if (auto* v = get("synthesis", "safety_horizon")) c.safety_horizon = static_cast<int>(v->as_number());
  if (auto* v = get("synthesis", "mode")) c.mode = v->as_string();
  if (auto* v = get("synthesis", "varkappa")) c.varkappa = v->as_number();
  if (auto* v = get("synthesis", "sos_domain")) c.sos_domain = v->as_string();
  if (auto* v = get("synthesis", "literal_levels")) c.literal_levels = v->as_bool();
  if (auto* v = get("synthesis", "solver_tol")) c.solver_tol = v->as_number();
  if (auto* v = get("synthesis", "max_iterations")) c.max_iterations = static_cast<int>(v->as_number());
  if (auto* v = get("synthesis", "pbar_min_eig")) c.pbar_min_eig = v->as_number();
  if (auto* v = get("synthesis", "margin_scale")) c.margin_scale = v->as_number();
  if (auto* v = get("synthesis", "trace_target")) c.trace_target = v->as_number();

  if (auto* v = get("verify", "grid_points")) c.grid_points = static_cast<int>(v->as_number());
  if (auto* v = get("verify", "mc_runs")) c.mc_runs = static_cast<int>(v->as_number());

  if (auto* v = get("output", "directory")) c.output_dir = v->as_string();
  return c;
}

std::string serialize_config(const RunConfig& c) {
  toml::Table t;
  auto& sys = t["system"];
  sys["benchmark"] = toml::Value::of(c.benchmark);
  sys["tau"] = toml::Value::of(c.tau);
  sys["inertias"] = from_vector(c.inertias);
  sys["input_bound"] = toml::Value::of(c.input_bound);
  if (c.input_box) sys["input_box"] = from_box(*c.input_box);
  if (c.a_matrix) sys["a_matrix"] = from_matrix(*c.a_matrix);
  if (c.b_matrix) sys["b_matrix"] = from_matrix(*c.b_matrix);
  if (!c.dictionary_file.empty()) sys["dictionary_file"] = toml::Value::of(c.dictionary_file);

  auto& noise = t["noise"];
  if (c.noise_kind) noise["kind"] = toml::Value::of(*c.noise_kind);
  if (c.noise_mean.size()) noise["mean"] = from_vector(c.noise_mean);
  if (c.noise_cov.size()) noise["covariance"] = from_matrix(c.noise_cov);
  if (c.noise_lo.size()) noise["lo"] = from_vector(c.noise_lo);
  if (c.noise_hi.size()) noise["hi"] = from_vector(c.noise_hi);
  if (c.gamma_mu) noise["gamma_mu"] = from_matrix(*c.gamma_mu);
  if (c.gamma_sigma) noise["gamma_sigma"] = from_matrix(*c.gamma_sigma);

  if (c.regions) {
    auto& reg = t["regions"];
    reg["state_box"] = from_box(c.regions->state_box);
    reg["initial_box"] = from_box(c.regions->initial_box);
    std::vector<toml::Value> boxes;
    for (const auto& b : c.regions->unsafe_boxes) boxes.push_back(from_box(b));
    reg["unsafe_boxes"] = toml::Value::of(std::move(boxes));
    if (c.regions->z_eta) reg["z_eta"] = from_vector(*c.regions->z_eta);
    if (c.regions->z_delta) reg["z_delta"] = from_vector(*c.regions->z_delta);
  }

  auto& exp = t["experiment"];
  exp["samples"] = toml::Value::of(static_cast<double>(c.samples));
  exp["horizon"] = toml::Value::of(static_cast<double>(c.data_horizon));
  exp["seed"] = toml::Value::of(static_cast<double>(c.seed));
  if (c.x0) exp["x0"] = from_vector(*c.x0);

  auto& syn = t["synthesis"];
  syn["kappa"] = from_numbers(c.kappas);
  syn["rho"] = from_numbers(c.rhos);
  syn["k_degree"] = toml::Value::of(static_cast<double>(c.k_degree));
  syn["alpha_degree"] = toml::Value::of(static_cast<double>(c.alpha_degree));
  syn["gram_half_degree"] = toml::Value::of(static_cast<double>(c.gram_half_degree));
  if (c.epsilon) syn["epsilon"] = toml::Value::of(*c.epsilon);
  syn["beta2bar_target"] = toml::Value::of(c.beta2bar_target);
  syn["safety_horizon"] = toml::Value::of(static_cast<double>(c.safety_horizon));
  syn["mode"] = toml::Value::of(c.mode);
  syn["varkappa"] = toml::Value::of(c.varkappa);
  syn["sos_domain"] = toml::Value::of(c.sos_domain);
  syn["literal_levels"] = toml::Value::of(c.literal_levels);
  syn["solver_tol"] = toml::Value::of(c.solver_tol);
  syn["max_iterations"] = toml::Value::of(static_cast<double>(c.max_iterations));
  syn["pbar_min_eig"] = toml::Value::of(c.pbar_min_eig);
  syn["margin_scale"] = toml::Value::of(c.margin_scale);
  syn["trace_target"] = toml::Value::of(c.trace_target);

  auto& ver = t["verify"];
  ver["grid_points"] = toml::Value::of(static_cast<double>(c.grid_points));
  ver["mc_runs"] = toml::Value::of(static_cast<double>(c.mc_runs));

  t["output"]["directory"] = toml::Value::of(c.output_dir);
  return toml::serialize(t);
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  RunConfig c = parse_config(buffer.str());
  if (const char* env = std::getenv("SCBC_SEED")) c.seed = std::strtoull(env, nullptr, 10);
  return c;
}

Benchmark build_system(const RunConfig& c, const std::filesystem::path& base_dir) {
  if (c.benchmark != "custom") {
    BenchmarkOverrides ov;
    ov.tau = c.tau;
    ov.inertias = c.inertias;
    ov.input_bound = c.input_bound;
    Benchmark bench = scbc::benchmark(c.benchmark, ov);
    if (c.regions) bench.regions = *c.regions;
    if (c.input_box || c.noise_kind) {
      NoiseSpec noise = bench.model.noise();
      if (c.noise_kind) {
        if (*c.noise_kind == "gaussian") noise = NoiseSpec::gaussian(c.noise_mean, c.noise_cov);
        else if (*c.noise_kind == "uniform") noise = NoiseSpec::uniform_box(c.noise_lo, c.noise_hi);
        else noise = NoiseSpec::point_mass(bench.model.state_dim());
        if (c.gamma_mu && c.gamma_sigma) noise.with_bounds(*c.gamma_mu, *c.gamma_sigma);
      }
      Box input = c.input_box ? *c.input_box : bench.model.input_box();
      SystemModel model(bench.model.system_matrix_oracle(), bench.model.input_matrix_oracle(),
                        bench.model.f_basis(), bench.model.g_poly(), noise, input);
      bench.model = std::move(model);
    }
    return bench;
  }
  if (!c.a_matrix || !c.b_matrix || c.dictionary_file.empty() || !c.regions || !c.noise_kind)
    throw std::invalid_argument(
        "config: custom systems need a_matrix, b_matrix, dictionary_file, regions and noise");
  std::ifstream df(base_dir / c.dictionary_file);
  if (!df) throw std::runtime_error("cannot open dictionary file " + c.dictionary_file);
  std::stringstream buffer;
  buffer << df.rdbuf();
  MonomialBasis dict = MonomialBasis::from_text(buffer.str());
  NoiseSpec noise = [&] {
    if (*c.noise_kind == "gaussian") return NoiseSpec::gaussian(c.noise_mean, c.noise_cov);
    if (*c.noise_kind == "uniform") return NoiseSpec::uniform_box(c.noise_lo, c.noise_hi);
    return NoiseSpec::point_mass(static_cast<int>(c.a_matrix->rows()));
  }();
  if (c.gamma_mu && c.gamma_sigma) noise.with_bounds(*c.gamma_mu, *c.gamma_sigma);
  const int m = c.b_matrix->cols();
  Box input = c.input_box ? *c.input_box : Box::cube(m, -c.input_bound, c.input_bound);
  SystemModel model(*c.a_matrix, *c.b_matrix, dict,
                    PolyMatrix::identity(m, static_cast<int>(c.a_matrix->rows())), noise, input);
  return Benchmark{"custom", std::move(model), *c.regions};
}

}  // namespace scbc
