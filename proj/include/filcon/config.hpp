#pragma once

// JSON problem files: one plant (expression or PWA form), optional observer
// gains, and per-command settings. The three bundled examples are embedded.

#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "measures.hpp"
#include "simulate.hpp"
#include "systems.hpp"

namespace filcon {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Box = std::vector<std::pair<double, double>>;

struct SimulationSettings {
  IntegratorConfig integrator;
  Vector x0;
  Vector xhat0;
};

struct CertifySettings {
  MeasureKind kind = MeasureKind::L2;
  Box region;
  Box output_range;
  std::size_t grid = 41;
  std::size_t output_grid = 41;
};

struct SynthSettings {
  double gain_lo = -5.0;
  double gain_hi = 5.0;
  std::vector<std::string> freeze;
  bool shared = false;
  std::size_t budget = 400;
};

struct RegStudySettings {
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  double tf = 3.0;
  std::string transition = "cubic";
};

struct EnvelopeSettings {
  double K = 1.0;
  double slack = 0.05;
  std::optional<double> rate;  // default: the certified rate
};

struct DisturbanceSettings {
  std::string parameter;
  double size = 0.1;
};

struct ProblemConfig {
  std::string source;  // file path or builtin:exampleN
  std::string name;
  std::shared_ptr<const BimodalSystem> system;
  std::optional<Matrix> L_plus, L_minus;
  SimulationSettings sim;
  CertifySettings certify;
  SynthSettings synth;
  RegStudySettings regstudy;
  EnvelopeSettings envelope;
  std::optional<DisturbanceSettings> disturbance;
};

namespace detail {

inline int line_of(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  int line = 1;
  for (std::size_t i = 0; i < pos; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const int line = line_of(text_, key);
    throw ConfigError(source_ + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg);
  }

  double number(const nlohmann::json& j, const std::string& key) const {
    if (!j.is_number()) fail(key, "'" + key + "' must be a number");
    return j.get<double>();
  }

  std::vector<double> numbers(const nlohmann::json& j, const std::string& key) const {
    if (!j.is_array()) fail(key, "'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, key));
    return out;
  }

  Vector vector(const nlohmann::json& j, const std::string& key) const {
    const auto v = numbers(j, key);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  Matrix matrix(const nlohmann::json& j, const std::string& key) const {
    if (!j.is_array() || j.empty()) fail(key, "'" + key + "' must be a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Matrix m;
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row = numbers(j[i], key);
      if (i == 0) {
        cols = row.size();
        if (cols == 0) fail(key, "'" + key + "' has an empty row");
        m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      } else if (row.size() != cols) {
        fail(key, "'" + key + "' rows have different lengths");
      }
      for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
    return m;
  }

  std::vector<std::string> strings(const nlohmann::json& j, const std::string& key) const {
    if (!j.is_array()) fail(key, "'" + key + "' must be an array of expression strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
      if (!v.is_string()) fail(key, "'" + key + "' entries must be strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  Box box(const nlohmann::json& j, const std::string& key) const {
    if (!j.is_array()) fail(key, "'" + key + "' must be an array of [lo, hi] pairs");
    Box b;
    for (const auto& v : j) {
      const auto p = numbers(v, key);
      if (p.size() != 2 || !(p[0] <= p[1])) fail(key, "'" + key + "' entries must be [lo, hi] with lo <= hi");
      b.emplace_back(p[0], p[1]);
    }
    return b;
  }

 private:
  const std::string& text_;
  std::string source_;
};

}  // namespace detail

inline ProblemConfig load_config_text(const std::string& text, const std::string& source) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  detail::Reader rd(text, source);
  if (!doc.is_object()) rd.fail("", "top level must be an object");

  ProblemConfig cfg;
  cfg.source = source;
  cfg.name = doc.value("name", std::string("unnamed"));

  static const std::vector<std::string> known = {"name",     "dimension", "parameters", "f_plus",  "f_minus",
                                                 "h",        "g",         "u",          "pwa",     "observer",
                                                 "simulation", "certify", "synth",      "regstudy", "envelope",
                                                 "disturbance", "description"};
  for (const auto& [k, v] : doc.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) rd.fail(k, "unknown field '" + k + "'");
  }

  ParamTable params;
  params.set("pi", std::numbers::pi);
  if (doc.contains("parameters")) {
    const auto& pj = doc["parameters"];
    if (!pj.is_object()) rd.fail("parameters", "'parameters' must be an object");
    for (const auto& [k, v] : pj.items()) {
      double value = 0.0;
      if (v.is_number()) {
        value = v.get<double>();
      } else if (v.is_string()) {
        try {
          value = eval(parse(v.get<std::string>(), 0, params), {}, 0.0, params.values);
        } catch (const std::exception& e) {
          rd.fail(k, "parameter '" + k + "': " + e.what());
        }
      } else {
        rd.fail(k, "parameter '" + k + "' must be a number or an expression string");
      }
      params.set(k, value);
    }
  }

  try {
    if (doc.contains("pwa")) {
      const auto& pj = doc["pwa"];
      PwaData pwa;
      pwa.A_plus = rd.matrix(pj.at("A_plus"), "A_plus");
      pwa.A_minus = rd.matrix(pj.at("A_minus"), "A_minus");
      pwa.b_plus = rd.vector(pj.at("b_plus"), "b_plus");
      pwa.b_minus = rd.vector(pj.at("b_minus"), "b_minus");
      pwa.h = rd.vector(pj.at("h"), "h");
      pwa.h0 = pj.contains("h0") ? rd.number(pj["h0"], "h0") : 0.0;
      pwa.C = rd.matrix(pj.at("C"), "C");
      std::vector<std::string> input;
      if (pj.contains("u")) {
        input = rd.strings(pj["u"], "u");
        pwa.B = rd.matrix(pj.at("B"), "B");
      }
      if (pj.contains("B_plus") || pj.contains("B_minus"))
        rd.fail("B_plus", "mode-dependent input matrices are not supported; use a single B");
      cfg.system = std::make_shared<const BimodalSystem>(BimodalSystem::from_pwa(pwa, input, params, cfg.name));
    } else {
      SystemDefinition def;
      def.name = cfg.name;
      if (!doc.contains("dimension")) rd.fail("dimension", "missing 'dimension'");
      const double nd = rd.number(doc["dimension"], "dimension");
      if (nd < 1 || nd != std::floor(nd)) rd.fail("dimension", "'dimension' must be a positive integer");
      def.n = static_cast<std::size_t>(nd);
      def.params = params;
      for (const char* key : {"f_plus", "f_minus", "h"})
        if (!doc.contains(key)) rd.fail(key, std::string("missing '") + key + "'");
      def.f_plus = rd.strings(doc["f_plus"], "f_plus");
      def.f_minus = rd.strings(doc["f_minus"], "f_minus");
      if (!doc["h"].is_string()) rd.fail("h", "'h' must be an expression string");
      def.h = doc["h"].get<std::string>();
      if (doc.contains("g")) def.g = rd.strings(doc["g"], "g");
      if (doc.contains("u")) def.u = rd.strings(doc["u"], "u");
      cfg.system = std::make_shared<const BimodalSystem>(BimodalSystem::from_definition(def));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    const auto key = msg.substr(0, msg.find('['));
    rd.fail(key, msg);
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }

  const auto n = static_cast<Eigen::Index>(cfg.system->dimension());
  const auto p = static_cast<Eigen::Index>(cfg.system->output_dimension());

  if (doc.contains("observer")) {
    const auto& oj = doc["observer"];
    if (oj.contains("L_plus")) cfg.L_plus = rd.matrix(oj["L_plus"], "L_plus");
    if (oj.contains("L_minus")) cfg.L_minus = rd.matrix(oj["L_minus"], "L_minus");
    for (const auto* L : {&cfg.L_plus, &cfg.L_minus})
      if (*L && ((*L)->rows() != n || (*L)->cols() != p))
        rd.fail("observer", "observer gains must be " + std::to_string(n) + "x" + std::to_string(p));
  }

  auto& sim = cfg.sim;
  sim.x0 = Vector::Zero(n);
  sim.xhat0 = Vector::Zero(n);
  if (doc.contains("simulation")) {
    const auto& sj = doc["simulation"];
    auto& ic = sim.integrator;
    auto num = [&](const char* key, double& dst) {
      if (sj.contains(key)) dst = rd.number(sj[key], key);
    };
    num("t0", ic.t0);
    num("tf", ic.tf);
    num("rel_tol", ic.rel_tol);
    num("abs_tol", ic.abs_tol);
    num("max_step", ic.max_step);
    num("tol_event", ic.tol_event);
    num("sample_interval", ic.sample_interval);
    if (sj.contains("x0")) sim.x0 = rd.vector(sj["x0"], "x0");
    if (sj.contains("xhat0")) sim.xhat0 = rd.vector(sj["xhat0"], "xhat0");
    if (sim.x0.size() != n || sim.xhat0.size() != n) rd.fail("x0", "initial states must have dimension " + std::to_string(n));
    try {
      ic.validate();
    } catch (const std::invalid_argument& e) {
      rd.fail("simulation", e.what());
    }
  }

  if (doc.contains("certify")) {
    const auto& cj = doc["certify"];
    if (cj.contains("measure")) {
      try {
        cfg.certify.kind = parse_measure_kind(cj["measure"].get<std::string>());
      } catch (const std::exception& e) {
        rd.fail("measure", e.what());
      }
    }
    if (cj.contains("region")) cfg.certify.region = rd.box(cj["region"], "region");
    if (cj.contains("output_range")) cfg.certify.output_range = rd.box(cj["output_range"], "output_range");
    if (cj.contains("grid")) cfg.certify.grid = static_cast<std::size_t>(rd.number(cj["grid"], "grid"));
    if (cj.contains("output_grid"))
      cfg.certify.output_grid = static_cast<std::size_t>(rd.number(cj["output_grid"], "output_grid"));
    if (!cfg.certify.region.empty() && cfg.certify.region.size() != static_cast<std::size_t>(n))
      rd.fail("region", "'region' needs one [lo, hi] pair per state");
    if (!cfg.certify.output_range.empty() && cfg.certify.output_range.size() != static_cast<std::size_t>(p))
      rd.fail("output_range", "'output_range' needs one [lo, hi] pair per output");
  }

  if (doc.contains("synth")) {
    const auto& sj = doc["synth"];
    if (sj.contains("gain_box")) {
      const auto b = rd.numbers(sj["gain_box"], "gain_box");
      if (b.size() != 2 || !(b[0] <= b[1])) rd.fail("gain_box", "'gain_box' must be [lo, hi]");
      cfg.synth.gain_lo = b[0];
      cfg.synth.gain_hi = b[1];
    }
    if (sj.contains("freeze")) cfg.synth.freeze = rd.strings(sj["freeze"], "freeze");
    if (sj.contains("shared")) cfg.synth.shared = sj["shared"].get<bool>();
    if (sj.contains("budget")) cfg.synth.budget = static_cast<std::size_t>(rd.number(sj["budget"], "budget"));
  }

  if (doc.contains("regstudy")) {
    const auto& rj = doc["regstudy"];
    if (rj.contains("eps")) cfg.regstudy.eps = rd.numbers(rj["eps"], "eps");
    if (rj.contains("tf")) cfg.regstudy.tf = rd.number(rj["tf"], "tf");
    if (rj.contains("transition")) cfg.regstudy.transition = rj["transition"].get<std::string>();
  }

  if (doc.contains("envelope")) {
    const auto& ej = doc["envelope"];
    if (ej.contains("K")) cfg.envelope.K = rd.number(ej["K"], "K");
    if (ej.contains("slack")) cfg.envelope.slack = rd.number(ej["slack"], "slack");
    if (ej.contains("rate")) cfg.envelope.rate = rd.number(ej["rate"], "rate");
  }

  if (doc.contains("disturbance")) {
    const auto& dj = doc["disturbance"];
    DisturbanceSettings d;
    d.parameter = dj.at("parameter").get<std::string>();
    if (dj.contains("size")) d.size = rd.number(dj["size"], "size");
    if (!cfg.system->params().index_of(d.parameter))
      rd.fail("disturbance", "disturbance parameter '" + d.parameter + "' is not a system parameter");
    cfg.disturbance = d;
  }
  return cfg;
}

inline ProblemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path);
}

// --- bundled examples -------------------------------------------------------

inline constexpr const char* kExample1 = R"json({
  "name": "example1",
  "description": "nonlinear bimodal system with quadratic output",
  "dimension": 2,
  "f_plus": ["-9*x1 - 3*x1^2 - 18", "-4*x2"],
  "f_minus": ["-9*x1 + 3*x1^2 + 18", "-4*x2"],
  "h": "x1",
  "g": ["x1^2"],
  "u": ["sin(2*pi*t)", "sin(2*pi*t)"],
  "observer": { "L_plus": [[-2], [0]], "L_minus": [[2], [0]] },
  "simulation": {
    "t0": 0, "tf": 3, "x0": [3, 3], "xhat0": [0, 0],
    "rel_tol": 1e-10, "abs_tol": 1e-12, "max_step": 0.01,
    "tol_event": 1e-10, "sample_interval": 0.001
  },
  "certify": {
    "measure": "l1", "region": [[-5, 5], [-5, 5]], "output_range": [[0, 25]],
    "grid": 41, "output_grid": 41
  },
  "synth": { "gain_box": [-5, 5], "freeze": ["l2p", "l2m"], "shared": false, "budget": 400 },
  "regstudy": { "eps": [1e-2, 5e-3, 2.5e-3], "tf": 3, "transition": "cubic" },
  "envelope": { "K": 1, "slack": 0.05 }
})json";

inline constexpr const char* kExample2 = R"json({
  "name": "example2",
  "description": "piecewise-affine system",
  "pwa": {
    "A_plus": [[-1, 0], [2, -2]], "b_plus": [-1, -3],
    "A_minus": [[-1, 0], [2, -3]], "b_minus": [2, 4],
    "B": [[0], [1]], "u": ["4*sin(2*pi*t)"],
    "h": [0, 1], "C": [[1, 1]]
  },
  "observer": { "L_plus": [[1], [1]], "L_minus": [[1], [1]] },
  "simulation": {
    "t0": 0, "tf": 5, "x0": [0.3, 0.3], "xhat0": [0, 0],
    "rel_tol": 1e-10, "abs_tol": 1e-12, "max_step": 0.01,
    "tol_event": 1e-10, "sample_interval": 0.001
  },
  "certify": {
    "measure": "l1", "region": [[-5, 5], [-5, 5]], "output_range": [[-10, 10]],
    "grid": 41, "output_grid": 41
  },
  "synth": { "gain_box": [-5, 5], "freeze": [], "shared": true, "budget": 400 },
  "regstudy": { "eps": [1e-2, 5e-3, 2.5e-3], "tf": 5, "transition": "cubic" },
  "envelope": { "K": 1, "slack": 0.05 }
})json";

inline constexpr const char* kExample3 = R"json({
  "name": "example3",
  "description": "harmonic oscillator with Coulomb friction",
  "dimension": 2,
  "parameters": { "wn": 1, "Q": 10, "m": 1, "Fd": 1, "wd": "pi", "Ff": 0.1 },
  "f_plus": ["x2", "-wn*x1 - (wn/Q)*x2 - Ff/m"],
  "f_minus": ["x2", "-wn*x1 - (wn/Q)*x2 + Ff/m"],
  "h": "x2",
  "g": ["x1"],
  "u": ["0", "(Fd/m)*sin(wd*t)"],
  "observer": { "L_plus": [[1.1], [-1]], "L_minus": [[1.1], [-1]] },
  "simulation": {
    "t0": 0, "tf": 60, "x0": [-1, 0], "xhat0": [0, 0],
    "rel_tol": 1e-10, "abs_tol": 1e-12, "max_step": 0.01,
    "tol_event": 1e-10, "sample_interval": 0.01
  },
  "certify": {
    "measure": "linf", "region": [[-5, 5], [-5, 5]], "output_range": [[-5, 5]],
    "grid": 41, "output_grid": 41
  },
  "synth": { "gain_box": [-5, 5], "freeze": [], "shared": true, "budget": 400 },
  "regstudy": { "eps": [1e-2, 5e-3, 2.5e-3], "tf": 20, "transition": "cubic" },
  "envelope": { "K": 1, "slack": 0.05 },
  "disturbance": { "parameter": "Ff", "size": 0.1 }
})json";

inline const char* builtin_example_text(int which) {
  switch (which) {
    case 1: return kExample1;
    case 2: return kExample2;
    case 3: return kExample3;
    default: throw ConfigError("no built-in example " + std::to_string(which) + " (choose 1, 2 or 3)");
  }
}

inline ProblemConfig builtin_example(int which) {
  return load_config_text(builtin_example_text(which), "builtin:example" + std::to_string(which));
}

/// Observer from the configured gains; throws if the config has none.
inline ObserverSpec observer_from(const ProblemConfig& cfg) {
  if (!cfg.L_plus || !cfg.L_minus) throw ConfigError(cfg.source + ": no observer gains configured");
  return ObserverSpec(cfg.system, *cfg.L_plus, *cfg.L_minus);
}

}  // namespace filcon
