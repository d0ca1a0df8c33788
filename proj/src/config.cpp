#include "pdctl/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pdctl {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) fail(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + ": expected a number");
  return j.get<double>();
}

Vector parse_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = get_number(j[i], where);
  return v;
}

Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(where + ": rows must be non-empty arrays");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) fail(where + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get_number(j[r][c], where);
  }
  return m;
}

// A matrix, "identity", or a scalar s meaning s * I.
Matrix parse_square(const json& j, Eigen::Index n, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() != "identity") fail(where + ": unknown matrix keyword");
    return Matrix::Identity(n, n);
  }
  if (j.is_number()) return j.get<double>() * Matrix::Identity(n, n);
  return parse_matrix(j, where);
}

json dump_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json dump_matrix(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

DisturbanceGenerator parse_disturbance(const json& j, Eigen::Index dx) {
  const std::string where = "disturbance";
  if (!j.is_object() || !j.contains("type")) fail(where + ": missing type");
  const std::string type = j.at("type").get<std::string>();
  DisturbanceGenerator gen{disturbance::Zero{dx}};
  auto vec_or_scalar = [&](const json& v, const std::string& key) {
    if (v.is_number()) return Vector::Constant(dx, v.get<double>()).eval();
    return parse_vector(v, where + "." + key);
  };
  if (type == "zero") {
    check_keys(j, {"type", "bound"}, where);
  } else if (type == "gaussian") {
    check_keys(j, {"type", "sigma", "bound"}, where);
    gen.kind = disturbance::IidGaussian{dx, get_number(j.at("sigma"), where + ".sigma")};
  } else if (type == "uniform") {
    check_keys(j, {"type", "low", "high", "scale", "bound"}, where);
    if (j.contains("scale")) {
      const Vector s = vec_or_scalar(j.at("scale"), "scale");
      gen.kind = disturbance::IidUniform{-s, s};
    } else {
      gen.kind = disturbance::IidUniform{vec_or_scalar(j.at("low"), "low"),
                                         vec_or_scalar(j.at("high"), "high")};
    }
  } else if (type == "sinusoid") {
    check_keys(j, {"type", "amplitude", "frequency", "phase", "phases", "bound"}, where);
    disturbance::Sinusoid s;
    s.amplitude = vec_or_scalar(j.at("amplitude"), "amplitude");
    if (j.contains("frequency")) s.frequency = get_number(j.at("frequency"), where);
    if (j.contains("phase")) s.phase = get_number(j.at("phase"), where);
    if (j.contains("phases")) s.phases = parse_vector(j.at("phases"), where + ".phases");
    gen.kind = s;
  } else if (type == "constant") {
    check_keys(j, {"type", "value", "bound"}, where);
    gen.kind = disturbance::Constant{vec_or_scalar(j.at("value"), "value")};
  } else if (type == "custom") {
    check_keys(j, {"type", "sequence", "bound"}, where);
    disturbance::Custom c;
    for (const auto& row : j.at("sequence")) c.sequence.push_back(parse_vector(row, where));
    gen.kind = std::move(c);
  } else {
    fail(where + ": unknown type '" + type + "'");
  }
  if (j.contains("bound")) gen.bound = get_number(j.at("bound"), where + ".bound");
  return gen;
}

json dump_disturbance(const DisturbanceGenerator& gen) {
  json j = std::visit(
      [](const auto& g) -> json {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, disturbance::Zero>) {
          return {{"type", "zero"}};
        } else if constexpr (std::is_same_v<G, disturbance::IidGaussian>) {
          return {{"type", "gaussian"}, {"sigma", g.sigma}};
        } else if constexpr (std::is_same_v<G, disturbance::IidUniform>) {
          return {{"type", "uniform"}, {"low", dump_vector(g.low)}, {"high", dump_vector(g.high)}};
        } else if constexpr (std::is_same_v<G, disturbance::Sinusoid>) {
          json s = {{"type", "sinusoid"},
                    {"amplitude", dump_vector(g.amplitude)},
                    {"frequency", g.frequency},
                    {"phase", g.phase}};
          if (g.phases.size()) s["phases"] = dump_vector(g.phases);
          return s;
        } else if constexpr (std::is_same_v<G, disturbance::Constant>) {
          return {{"type", "constant"}, {"value", dump_vector(g.value)}};
        } else {
          json seq = json::array();
          for (const auto& v : g.sequence) seq.push_back(dump_vector(v));
          return {{"type", "custom"}, {"sequence", seq}};
        }
      },
      gen.kind);
  if (std::isfinite(gen.bound)) j["bound"] = gen.bound;
  return j;
}

ControllerSpec parse_controller(const json& j, Eigen::Index dx, Eigen::Index du) {
  const std::string where = "controller";
  check_keys(j,
             {"type", "schedule", "eta", "delta", "h", "eta_scale", "delta_scale",
              "radius_scale", "project", "signal", "gamma", "sigma", "L", "sim_A", "sim_B",
              "weight_decay", "update_period", "delay", "kappa", "alpha"},
             where);
  ControllerSpec c;
  auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = get_number(j.at(key), where + "." + key);
  };
  auto opt_num = [&](const char* key, std::optional<double>& out) {
    if (j.contains(key)) out = get_number(j.at(key), where + "." + key);
  };
  if (j.contains("type")) c.type = j.at("type").get<std::string>();
  if (j.contains("schedule")) c.schedule = j.at("schedule").get<std::string>();
  opt_num("eta", c.eta);
  opt_num("delta", c.delta);
  if (j.contains("h")) {
    if (!j.at("h").is_number_integer()) fail(where + ".h: expected an integer");
    c.h = j.at("h").get<int>();
  }
  num("eta_scale", c.eta_scale);
  num("delta_scale", c.delta_scale);
  num("radius_scale", c.radius_scale);
  if (j.contains("project")) c.project = j.at("project").get<bool>();
  if (j.contains("signal")) c.signal = j.at("signal").get<std::string>();
  num("gamma", c.gamma);
  if (j.contains("sigma")) c.sigma = parse_square(j.at("sigma"), du, where + ".sigma");
  if (j.contains("L")) c.L = parse_square(j.at("L"), dx, where + ".L");
  if (j.contains("sim_A")) c.sim_A = parse_matrix(j.at("sim_A"), where + ".sim_A");
  if (j.contains("sim_B")) c.sim_B = parse_matrix(j.at("sim_B"), where + ".sim_B");
  num("weight_decay", c.weight_decay);
  if (j.contains("update_period")) c.update_period = j.at("update_period").get<int>();
  if (j.contains("delay")) c.delay = j.at("delay").get<int>();
  opt_num("kappa", c.kappa);
  opt_num("alpha", c.alpha);
  return c;
}

json dump_controller(const ControllerSpec& c) {
  json j = {{"type", c.type},
            {"schedule", c.schedule},
            {"eta_scale", c.eta_scale},
            {"delta_scale", c.delta_scale},
            {"radius_scale", c.radius_scale},
            {"project", c.project},
            {"signal", c.signal},
            {"gamma", c.gamma},
            {"weight_decay", c.weight_decay},
            {"update_period", c.update_period},
            {"delay", c.delay}};
  if (c.eta) j["eta"] = *c.eta;
  if (c.delta) j["delta"] = *c.delta;
  if (c.h) j["h"] = *c.h;
  if (c.sigma) j["sigma"] = dump_matrix(*c.sigma);
  if (c.L) j["L"] = dump_matrix(*c.L);
  if (c.sim_A) j["sim_A"] = dump_matrix(*c.sim_A);
  if (c.sim_B) j["sim_B"] = dump_matrix(*c.sim_B);
  if (c.kappa) j["kappa"] = *c.kappa;
  if (c.alpha) j["alpha"] = *c.alpha;
  return j;
}

std::vector<std::uint64_t> default_seeds() {
  std::vector<std::uint64_t> s(25);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

ExperimentConfig from_json(const json& j) {
  check_keys(j,
             {"name", "preset", "system", "base_gain", "K", "disturbance", "cost", "controller",
              "T", "seeds", "x0", "oracle", "oracle_restarts", "oracle_iterations",
              "trajectories", "output"},
             "config");
  ExperimentConfig cfg;
  if (j.contains("preset")) {
    cfg = preset(j.at("preset").get<std::string>());
  } else {
    cfg.seeds = default_seeds();
  }
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
  if (j.contains("system")) {
    const json& s = j.at("system");
    check_keys(s, {"A", "B"}, "system");
    cfg.A = parse_matrix(s.at("A"), "system.A");
    cfg.B = parse_matrix(s.at("B"), "system.B");
  }
  if (cfg.A.size() == 0) fail("config: system (or a preset) is required");
  const Eigen::Index dx = cfg.A.rows();
  const Eigen::Index du = cfg.B.cols();
  if (j.contains("base_gain")) cfg.base_gain = j.at("base_gain").get<std::string>();
  if (j.contains("K")) {
    cfg.K = parse_matrix(j.at("K"), "K");
    if (!j.contains("base_gain")) cfg.base_gain = "explicit";
  }
  if (j.contains("disturbance")) cfg.disturbance = parse_disturbance(j.at("disturbance"), dx);
  else if (!j.contains("preset")) cfg.disturbance = DisturbanceGenerator{disturbance::Zero{dx}};
  if (cfg.Q.size() == 0) cfg.Q = Matrix::Identity(dx, dx);
  if (cfg.R.size() == 0) cfg.R = Matrix::Identity(du, du);
  if (j.contains("cost")) {
    const json& c = j.at("cost");
    check_keys(c, {"Q", "R"}, "cost");
    if (c.contains("Q")) cfg.Q = parse_square(c.at("Q"), dx, "cost.Q");
    if (c.contains("R")) cfg.R = parse_square(c.at("R"), du, "cost.R");
  }
  if (j.contains("controller")) {
    json merged = j.at("controller");
    if (j.contains("preset")) {
      json base = json::parse(serialize_config(cfg)).at("controller");
      base.merge_patch(merged);
      merged = base;
    }
    cfg.controller = parse_controller(merged, dx, du);
  }
  if (j.contains("T")) {
    if (!j.at("T").is_number_integer()) fail("config.T: expected an integer");
    cfg.T = j.at("T").get<std::int64_t>();
  }
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : j.at("seeds")) {
      if (!s.is_number_unsigned()) fail("config.seeds: expected non-negative integers");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (j.contains("x0")) cfg.x0 = parse_vector(j.at("x0"), "x0");
  if (j.contains("oracle")) cfg.oracle = j.at("oracle").get<bool>();
  if (j.contains("oracle_restarts")) cfg.oracle_restarts = j.at("oracle_restarts").get<int>();
  if (j.contains("oracle_iterations")) cfg.oracle_iterations = j.at("oracle_iterations").get<int>();
  if (j.contains("trajectories")) cfg.trajectories = j.at("trajectories").get<bool>();
  if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
  cfg.validate();
  return cfg;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) fail("config: A must be square and non-empty");
  if (B.rows() != A.rows() || B.cols() == 0) fail("config: B must have as many rows as A");
  const Eigen::Index dx = A.rows();
  const Eigen::Index du = B.cols();
  if (!A.allFinite() || !B.allFinite()) fail("config: non-finite system matrices");
  if (disturbance.dim() != dx) fail("config: disturbance dimension must equal d_x");
  if (Q.rows() != dx || Q.cols() != dx) fail("config: cost.Q must be d_x x d_x");
  if (R.rows() != du || R.cols() != du) fail("config: cost.R must be d_u x d_u");
  if (base_gain != "lqr" && base_gain != "zero" && base_gain != "explicit")
    fail("config: base_gain must be lqr, zero or explicit");
  if (base_gain == "explicit" && (!K || K->rows() != du || K->cols() != dx))
    fail("config: explicit base gain K must be d_u x d_x");
  if (T < 1) fail("config: T must be >= 1");
  if (seeds.empty()) fail("config: at least one seed is required");
  if (x0 && x0->size() != dx) fail("config: x0 must have d_x entries");
  if (oracle_restarts < 1 || oracle_iterations < 1) fail("config: oracle settings must be >= 1");
  const auto& c = controller;
  static const std::set<std::string> types{"zero", "lqr", "gpc", "rbpc", "bpc", "mfgpc"};
  if (!types.count(c.type)) fail("config: unknown controller type '" + c.type + "'");
  if (c.schedule != "theorem" && c.schedule != "smooth" && c.schedule != "manual")
    fail("config: schedule must be theorem, smooth or manual");
  if (c.schedule == "manual" && (c.type == "rbpc" || c.type == "bpc" || c.type == "mfgpc" ||
                                  c.type == "gpc") &&
      !(c.eta && c.h && (c.type == "gpc" || c.delta || c.sigma)))
    fail("config: manual schedule needs eta, h and delta (or sigma)");
  if (c.eta && !(*c.eta > 0.0)) fail("config: eta must be positive");
  if (c.delta && !(*c.delta > 0.0)) fail("config: delta must be positive");
  if (c.h && *c.h < 1) fail("config: h must be >= 1");
  if (!(c.eta_scale > 0.0) || !(c.delta_scale > 0.0) || !(c.radius_scale > 0.0))
    fail("config: scales must be positive");
  if (c.signal != "true" && c.signal != "pd1" && c.signal != "pd2" && c.signal != "pd3")
    fail("config: signal must be true, pd1, pd2 or pd3");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) fail("config: gamma must lie in (0, 1]");
  if (c.sigma && (c.sigma->rows() != du || c.sigma->cols() != du))
    fail("config: sigma must be d_u x d_u");
  if (c.L && c.L->cols() != dx) fail("config: L must have d_x columns");
  if (c.sim_A && (c.sim_A->rows() != dx || c.sim_A->cols() != dx))
    fail("config: sim_A must be d_x x d_x");
  if (c.sim_B && (c.sim_B->rows() != dx || c.sim_B->cols() != du))
    fail("config: sim_B must be d_x x d_u");
  if (c.weight_decay < 0.0 || c.weight_decay > 1.0) fail("config: weight_decay must lie in [0, 1]");
  if (c.update_period < 1) fail("config: update_period must be >= 1");
  if (c.delay < 0) fail("config: delay must be >= 0");
  if (c.kappa && *c.kappa < 1.0) fail("config: kappa must be >= 1");
  if (c.alpha && !(*c.alpha > 0.0 && *c.alpha <= 1.0)) fail("config: alpha must lie in (0, 1]");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("config: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    fail(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    fail(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j = {{"name", cfg.name},
            {"system", {{"A", dump_matrix(cfg.A)}, {"B", dump_matrix(cfg.B)}}},
            {"base_gain", cfg.base_gain},
            {"disturbance", dump_disturbance(cfg.disturbance)},
            {"cost", {{"Q", dump_matrix(cfg.Q)}, {"R", dump_matrix(cfg.R)}}},
            {"controller", dump_controller(cfg.controller)},
            {"T", cfg.T},
            {"seeds", cfg.seeds},
            {"oracle", cfg.oracle},
            {"oracle_restarts", cfg.oracle_restarts},
            {"oracle_iterations", cfg.oracle_iterations},
            {"trajectories", cfg.trajectories},
            {"output", cfg.output}};
  if (cfg.K) j["K"] = dump_matrix(*cfg.K);
  if (cfg.x0) j["x0"] = dump_vector(*cfg.x0);
  return j.dump(2) + "\n";
}

std::vector<std::string> preset_names() { return {"lds-small", "lds-large"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.seeds = default_seeds();
  cfg.controller.h = 5;
  cfg.controller.radius_scale = 0.005;
  const Matrix di = (Matrix(2, 2) << 1.0, 1.0, 0.0, 1.0).finished();
  const Matrix bi = (Matrix(2, 1) << 0.0, 1.0).finished();
  if (name == "lds-small") {
    cfg.A = di;
    cfg.B = bi;
    disturbance::Sinusoid s;
    s.amplitude = Vector::Constant(2, 0.3);
    s.phases = (Vector(2) << 0.0, std::numbers::pi / 2.0).finished();
    cfg.disturbance = DisturbanceGenerator{s};
  } else if (name == "lds-large") {
    // Five double integrators, each position nudged by the next block's velocity.
    Matrix A = kron(Matrix::Identity(5, 5), di);
    for (int k = 0; k < 5; ++k) A(2 * k, 2 * ((k + 1) % 5) + 1) += 0.1;
    cfg.A = A;
    cfg.B = kron(Matrix::Identity(5, 5), bi);
    disturbance::Sinusoid s;
    s.amplitude = Vector::Constant(10, 0.3);
    s.phases.resize(10);
    for (int i = 0; i < 10; ++i) s.phases(i) = 0.5 * std::numbers::pi * i;
    cfg.disturbance = DisturbanceGenerator{s};
    // learning is slow at this size; the schedule needs a longer horizon and a smaller step
    cfg.T = 50000;
    cfg.controller.eta_scale = 0.03;
  } else {
    fail("unknown preset '" + name + "'");
  }
  cfg.Q = Matrix::Identity(cfg.A.rows(), cfg.A.rows());
  cfg.R = Matrix::Identity(cfg.B.cols(), cfg.B.cols());
  cfg.output = "results/" + name;
  return cfg;
}

ExperimentConfig resolve_config(const std::string& name_or_path) {
  for (const auto& p : preset_names())
    if (p == name_or_path) return preset(p);
  return load_config(name_or_path);
}

}  // namespace pdctl
