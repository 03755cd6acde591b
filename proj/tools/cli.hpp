#pragma once

// Command-line front end: simulate | certify | observe | synth | regstudy.
// Exit codes: 0 success, 1 failed verdict, 2 usage/config error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "filcon/filcon.hpp"

namespace filcon::cli {

inline constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kVerdict = 1, kUsage = 2, kNumeric = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(what + ": cannot parse '" + tok + "' as a number");
    }
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

inline std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

/// "lo:hi,lo:hi" -> box
inline Box parse_box(const std::string& s, const std::string& what) {
  Box b;
  for (const auto& part : split_names(s)) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw UsageError(what + ": expected lo:hi pairs separated by commas");
    const auto lo = parse_list(part.substr(0, colon), what);
    const auto hi = parse_list(part.substr(colon + 1), what);
    if (lo.size() != 1 || hi.size() != 1 || !(lo[0] <= hi[0])) throw UsageError(what + ": bad interval '" + part + "'");
    b.emplace_back(lo[0], hi[0]);
  }
  return b;
}

inline Matrix gain_matrix(const std::vector<double>& v, std::size_t n, std::size_t p, const std::string& what) {
  if (v.size() != n * p)
    throw UsageError(what + ": expected " + std::to_string(n * p) + " values (an " + std::to_string(n) + "x" +
                     std::to_string(p) + " gain, row-major)");
  Matrix L(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i * p + j];
  return L;
}

inline std::vector<double> flat(const Matrix& m) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

struct Options {
  std::string config;
  int example = 0;
  std::string out = "out";
  std::string measure;
  std::uint64_t seed = 1;
  // simulation
  std::optional<double> tf, rtol, atol, max_step, sample;
  std::string x0, xhat0;
  // gains
  std::string gains, gains_plus, gains_minus;
  // certify
  std::optional<std::size_t> grid, output_grid;
  std::string region, output_range;
  // observe
  std::optional<double> K, slack, rate;
  bool disturbance = false;
  bool log_plot = true;
  // synth
  std::string freeze;
  std::optional<std::size_t> budget;
  std::string box;
  std::optional<bool> shared;
  // regstudy
  std::string eps, transition;
};

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

  ProblemConfig load() {
    if (o_.config.empty() == (o_.example == 0)) throw UsageError("give exactly one of --config PATH or --example N");
    ProblemConfig cfg = o_.example ? builtin_example(o_.example) : load_config_file(o_.config);
    const auto n = cfg.system->dimension();
    const auto p = cfg.system->output_dimension();
    auto& ic = cfg.sim.integrator;
    if (o_.tf) ic.tf = *o_.tf;
    if (o_.rtol) ic.rel_tol = *o_.rtol;
    if (o_.atol) ic.abs_tol = *o_.atol;
    if (o_.max_step) ic.max_step = *o_.max_step;
    if (o_.sample) ic.sample_interval = *o_.sample;
    try {
      ic.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    auto state = [&](const std::string& s, const char* what) {
      const auto v = parse_list(s, what);
      if (v.size() != n) throw UsageError(std::string(what) + ": expected " + std::to_string(n) + " values");
      return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(n)));
    };
    if (!o_.x0.empty()) cfg.sim.x0 = state(o_.x0, "--x0");
    if (!o_.xhat0.empty()) cfg.sim.xhat0 = state(o_.xhat0, "--xhat0");
    if (!o_.gains.empty()) cfg.L_plus = cfg.L_minus = gain_matrix(parse_list(o_.gains, "--gains"), n, p, "--gains");
    if (!o_.gains_plus.empty()) cfg.L_plus = gain_matrix(parse_list(o_.gains_plus, "--gains-plus"), n, p, "--gains-plus");
    if (!o_.gains_minus.empty())
      cfg.L_minus = gain_matrix(parse_list(o_.gains_minus, "--gains-minus"), n, p, "--gains-minus");
    if (!o_.measure.empty()) {
      try {
        cfg.certify.kind = parse_measure_kind(o_.measure);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    if (o_.grid) cfg.certify.grid = *o_.grid;
    if (o_.output_grid) cfg.certify.output_grid = *o_.output_grid;
    if (!o_.region.empty()) cfg.certify.region = parse_box(o_.region, "--region");
    if (!o_.output_range.empty()) cfg.certify.output_range = parse_box(o_.output_range, "--output-range");
    if (o_.K) cfg.envelope.K = *o_.K;
    if (o_.slack) cfg.envelope.slack = *o_.slack;
    if (o_.rate) cfg.envelope.rate = *o_.rate;
    if (!o_.freeze.empty()) cfg.synth.freeze = split_names(o_.freeze);
    if (o_.budget) cfg.synth.budget = *o_.budget;
    if (o_.shared) cfg.synth.shared = *o_.shared;
    if (!o_.box.empty()) {
      const auto b = parse_list(o_.box, "--box");
      if (b.size() != 2 || !(b[0] <= b[1])) throw UsageError("--box: expected lo,hi");
      cfg.synth.gain_lo = b[0];
      cfg.synth.gain_hi = b[1];
    }
    if (!o_.eps.empty()) cfg.regstudy.eps = parse_list(o_.eps, "--eps");
    if (!o_.transition.empty()) cfg.regstudy.transition = o_.transition;
    if (o_.tf) cfg.regstudy.tf = *o_.tf;
    return cfg;
  }

  void begin(const std::string& command, const ProblemConfig& cfg) {
    manifest_ = nlohmann::ordered_json::object();
    manifest_["command"] = command;
    manifest_["config"] = cfg.source;
    manifest_["tool_version"] = kVersion;
    manifest_["output_dir"] = o_.out;
    manifest_["system"] = cfg.name;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    const auto& pt = cfg.system->params();
    for (std::size_t i = 0; i < pt.names.size(); ++i) params[pt.names[i]] = pt.values[i];
    manifest_["parameters"] = params;
    resolved_ = nlohmann::ordered_json::object();
  }

  void resolve(const std::string& key, nlohmann::ordered_json v) { resolved_[key] = std::move(v); }

  void resolve_integrator(const IntegratorConfig& ic) {
    resolve("t0", ic.t0);
    resolve("tf", ic.tf);
    resolve("rel_tol", ic.rel_tol);
    resolve("abs_tol", ic.abs_tol);
    resolve("max_step", ic.max_step);
    resolve("tol_event", ic.tol_event);
    resolve("sample_interval", ic.sample_interval);
  }

  /// Files are buffered and only written once the command has finished.
  std::ostringstream& file(const std::string& name) {
    order_.push_back(name);
    return files_[name];
  }

  void commit() {
    namespace fs = std::filesystem;
    fs::create_directories(o_.out);
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& name : order_) {
      std::ofstream f(fs::path(o_.out) / name, std::ios::binary);
      f << files_[name].str();
      if (!f) throw std::runtime_error("cannot write " + (fs::path(o_.out) / name).string());
      list.push_back(name);
    }
    list.push_back("manifest.json");
    manifest_["resolved"] = resolved_;
    manifest_["files"] = list;
    std::ofstream m(fs::path(o_.out) / "manifest.json", std::ios::binary);
    m << manifest_.dump(2) << "\n";
  }

  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }
  const Options& opts() const { return o_; }

 private:
  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  nlohmann::ordered_json manifest_, resolved_;
  std::map<std::string, std::ostringstream> files_;
  std::vector<std::string> order_;
};

inline nlohmann::ordered_json box_json(const Box& b) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& [lo, hi] : b) j.push_back({lo, hi});
  return j;
}

inline int cmd_simulate(Runner& r) {
  const auto cfg = r.load();
  r.begin("simulate", cfg);
  r.resolve_integrator(cfg.sim.integrator);
  r.resolve("x0", flat(cfg.sim.x0));
  const auto tr = integrate(*cfg.system, cfg.sim.x0, cfg.sim.integrator);
  const auto n = cfg.system->dimension();
  write_trajectory_csv(r.file("trajectory.csv"), tr, n);
  write_events_csv(r.file("events.csv"), tr, n);
  write_svg_plot(r.file("trajectory.svg"), trajectory_series(tr, n), cfg.name + ": states", "t", "x");
  r.commit();
  r.out() << "simulated " << cfg.name << " on [" << fmt17(cfg.sim.integrator.t0) << ", " << fmt17(cfg.sim.integrator.tf)
          << "]: " << tr.samples.size() << " samples, " << tr.events.size() << " events ("
          << tr.count(EventKind::Crossing) << " crossings, " << tr.count(EventKind::SlidingEntry) << " sliding entries, "
          << tr.count(EventKind::SlidingExit) << " sliding exits, " << tr.count(EventKind::Grazing) << " grazing)\n";
  return kOk;
}

inline Certificate certify_config(const ProblemConfig& cfg) {
  const auto o = certify_options_from(cfg);
  if (cfg.L_plus && cfg.L_minus) return certify_auto(observer_from(cfg), o);
  return certify_plant(*cfg.system, o);
}

inline void resolve_certify(Runner& r, const ProblemConfig& cfg) {
  r.resolve("measure", std::string(to_string(cfg.certify.kind)));
  r.resolve("region", box_json(cfg.certify.region));
  r.resolve("output_range", box_json(cfg.certify.output_range));
  r.resolve("grid", cfg.certify.grid);
  r.resolve("output_grid", cfg.certify.output_grid);
  if (cfg.L_plus) r.resolve("L_plus", flat(*cfg.L_plus));
  if (cfg.L_minus) r.resolve("L_minus", flat(*cfg.L_minus));
}

inline int cmd_certify(Runner& r) {
  const auto cfg = r.load();
  if (!cfg.system->pwa() && cfg.certify.region.empty()) throw UsageError("certify: no region configured (use --region)");
  r.begin("certify", cfg);
  resolve_certify(r, cfg);
  const auto c = certify_config(cfg);
  write_certificate_report(r.file("certificate.txt"), c);
  write_certificate_csv_row(r.file("certificate.csv"), c, true);
  r.commit();
  r.out() << "verdict: " << to_string(c.verdict) << "  rate: " << fmt17(c.rate) << "  c1: " << fmt17(c.c1)
          << "  c2: " << fmt17(c.c2) << "  sliding residual: " << fmt17(c.sliding_residual) << "  (" << c.method
          << ", " << to_string(c.kind) << ")\n";
  return c.verdict == Verdict::Certified ? kOk : kVerdict;
}

inline int cmd_observe(Runner& r) {
  const auto cfg = r.load();
  const ObserverSpec obs = observer_from(cfg);
  r.begin("observe", cfg);
  resolve_certify(r, cfg);
  r.resolve_integrator(cfg.sim.integrator);
  r.resolve("x0", flat(cfg.sim.x0));
  r.resolve("xhat0", flat(cfg.sim.xhat0));

  double c = 0.0;
  std::optional<Certificate> cert;
  if (cfg.envelope.rate) {
    c = *cfg.envelope.rate;
  } else {
    if (!cfg.system->pwa() && cfg.certify.region.empty())
      throw UsageError("observe: no certification region configured; pass --rate");
    cert = certify_config(cfg);
    if (cert->verdict != Verdict::Certified)
      throw UsageError("observe: gains are not certified (" + std::string(to_string(cert->verdict)) +
                       "); pass --rate to check an envelope anyway");
    c = cert->rate;
  }
  r.resolve("envelope_rate", c);
  r.resolve("envelope_K", cfg.envelope.K);
  r.resolve("slack", cfg.envelope.slack);
  const MeasureKind kind = cfg.certify.kind;
  const auto pr = run_pair(obs, cfg.sim.x0, cfg.sim.xhat0, cfg.sim.integrator, kind);
  const auto env = check_envelope(pr.trace, cfg.envelope.K, c, cfg.envelope.slack);

  const auto n = cfg.system->dimension();
  write_trajectory_csv(r.file("plant.csv"), pr.plant, n);
  write_events_csv(r.file("plant_events.csv"), pr.plant, n);
  write_trajectory_csv(r.file("observer.csv"), pr.observer, n);
  write_error_csv(r.file("error.csv"), env);
  auto states = trajectory_series(pr.plant, n, "x");
  auto est = trajectory_series(pr.observer, n, "xhat");
  for (auto& s : est) s.dashed = true;
  states.insert(states.end(), est.begin(), est.end());
  write_svg_plot(r.file("states.svg"), states, cfg.name + ": plant and observer", "t", "state");
  Series es{"|e|", {}, {}, false}, bs{"bound", {}, {}, true};
  for (const auto& s : env.samples) {
    es.x.push_back(s.t);
    es.y.push_back(s.err);
    bs.x.push_back(s.t);
    bs.y.push_back(s.bound);
  }
  write_svg_plot(r.file("error.svg"), {es, bs}, cfg.name + ": estimation error (" + std::string(to_string(kind)) + ")",
                 "t", "|e|", r.opts().log_plot);

  bool ok = env.pass;
  std::ostringstream summary;
  summary << "envelope: " << (env.pass ? "pass" : "fail") << "  c: " << fmt17(c) << "  K: " << fmt17(env.K)
          << "  slack: " << fmt17(env.slack) << "  fitted K: " << fmt17(env.fitted_K)
          << "  violations: " << env.violations.size() << "\n";
  if (r.opts().disturbance) {
    if (!cfg.disturbance) throw UsageError("observe: config has no disturbance section");
    const auto rep = disturbance_study(obs, cfg.disturbance->parameter, cfg.disturbance->size, cfg.sim.x0,
                                       cfg.sim.xhat0, cfg.sim.integrator, kind, c, cfg.envelope.K, cfg.envelope.slack);
    auto& f = r.file("disturbance.csv");
    f << "relative,value,tail_sup,e0\r\n";
    for (const auto& l : rep.levels)
      f << fmt17(l.relative) << ',' << fmt17(l.value) << ',' << fmt17(l.tail_sup) << ',' << fmt17(l.e0) << "\r\n";
    summary << "disturbance (" << rep.parameter << "): " << (rep.pass() ? "bounded" : "not bounded")
            << "  tail sups: " << fmt17(rep.levels[0].tail_sup) << ", " << fmt17(rep.levels[1].tail_sup) << ", "
            << fmt17(rep.levels[2].tail_sup) << "  ratio: " << fmt17(rep.ratio) << "\n";
    ok = ok && rep.pass();
  }
  r.file("summary.txt") << summary.str();
  r.commit();
  r.out() << summary.str();
  return ok ? kOk : kVerdict;
}

inline int cmd_synth(Runner& r, std::uint64_t seed) {
  const auto cfg = r.load();
  const auto n = static_cast<Eigen::Index>(cfg.system->dimension());
  const auto p = static_cast<Eigen::Index>(cfg.system->output_dimension());
  if (!cfg.system->pwa() && cfg.certify.region.empty()) throw UsageError("synth: no region configured (use --region)");
  SynthesisProblem prob;
  prob.start = ObserverSpec(cfg.system, cfg.L_plus.value_or(Matrix::Zero(n, p)), cfg.L_minus.value_or(Matrix::Zero(n, p)));
  prob.certify = certify_options_from(cfg);
  prob.lo = cfg.synth.gain_lo;
  prob.hi = cfg.synth.gain_hi;
  prob.freeze = cfg.synth.freeze;
  prob.shared = cfg.synth.shared;
  prob.budget = cfg.synth.budget;
  prob.seed = seed;
  r.begin("synth", cfg);
  resolve_certify(r, cfg);
  r.resolve("gain_box", {prob.lo, prob.hi});
  r.resolve("freeze", prob.freeze);
  r.resolve("shared", prob.shared);
  r.resolve("budget", prob.budget);
  r.resolve("seed", seed);
  SynthesisResult res;
  try {
    res = synthesize(prob);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto& f = r.file("synth.txt");
  f << "feasible: " << (res.feasible ? "yes" : "no") << '\n'
    << "evaluations: " << res.evaluations << '\n'
    << "L_plus: " << matrix_string(res.L_plus) << '\n'
    << "L_minus: " << matrix_string(res.L_minus) << '\n';
  for (std::size_t k = 0; k < res.free_names.size(); ++k)
    f << res.free_names[k] << ": " << fmt17(res.free_values[k]) << '\n';
  f << '\n';
  write_certificate_report(f, res.certificate);
  write_certificate_csv_row(r.file("certificate.csv"), res.certificate, true);
  r.commit();
  r.out() << (res.feasible ? "feasible" : "infeasible") << "  rate: " << fmt17(res.certificate.rate)
          << "  L_plus: " << matrix_string(res.L_plus) << "  L_minus: " << matrix_string(res.L_minus)
          << "  evaluations: " << res.evaluations << "\n";
  return res.feasible ? kOk : kVerdict;
}

inline int cmd_regstudy(Runner& r) {
  const auto cfg = r.load();
  TransitionKind tk;
  try {
    tk = parse_transition_kind(cfg.regstudy.transition);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto ic = cfg.sim.integrator;
  ic.tf = cfg.regstudy.tf;
  r.begin("regstudy", cfg);
  r.resolve_integrator(ic);
  r.resolve("x0", flat(cfg.sim.x0));
  r.resolve("eps", cfg.regstudy.eps);
  r.resolve("transition", cfg.regstudy.transition);
  r.resolve("norm", std::string(to_string(cfg.certify.kind)));
  OrderStudy st;
  try {
    st = order_study(*cfg.system, tk, cfg.sim.x0, ic, cfg.regstudy.eps, cfg.certify.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto& f = r.file("order.csv");
  write_order_csv(f, st);
  const bool ok = std::isfinite(st.slope) && st.slope >= 0.8 && st.slope <= 1.2;
  std::ostringstream summary;
  summary << "slope: " << fmt17(st.slope) << "  constant: " << fmt17(st.constant) << "  first order: "
          << (ok ? "yes" : "no") << "\n";
  for (const auto& p : st.points)
    if (!p.ok()) summary << "eps " << fmt17(p.epsilon) << " failed: " << p.error << "\n";
  r.file("summary.txt") << summary.str();
  Series s{"sup deviation", {}, {}, false};
  for (const auto& p : st.points) {
    s.x.push_back(std::log10(p.epsilon));
    s.y.push_back(p.deviation);
  }
  write_svg_plot(r.file("order.svg"), {s}, cfg.name + ": regularization deviation", "log10 eps", "deviation", true);
  r.commit();
  r.out() << summary.str();
  if (!st.reference_error.empty()) return kNumeric;
  return ok ? kOk : kVerdict;
}

/// Entry point; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bimodal Filippov systems: simulation, contraction certificates, observers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "problem file (JSON)");
  app.add_option("--example", o.example, "built-in example 1, 2 or 3")->check(CLI::Range(1, 3));
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--measure", o.measure, "l1 | l2 | linf");
  app.add_option("--seed", o.seed, "seed for the synthesis grid order")->capture_default_str();

  auto sim_opts = [&](CLI::App* c) {
    c->add_option("--tf", o.tf, "final time");
    c->add_option("--rtol", o.rtol, "relative tolerance");
    c->add_option("--atol", o.atol, "absolute tolerance");
    c->add_option("--max-step", o.max_step, "maximum step");
    c->add_option("--sample", o.sample, "output sample interval");
    c->add_option("--x0", o.x0, "initial plant state, comma separated");
  };
  auto gain_opts = [&](CLI::App* c) {
    c->add_option("--gains", o.gains, "gain for both modes, row-major, comma separated");
    c->add_option("--gains-plus", o.gains_plus, "plus-mode gain");
    c->add_option("--gains-minus", o.gains_minus, "minus-mode gain");
  };
  auto cert_opts = [&](CLI::App* c) {
    c->add_option("--grid", o.grid, "grid points per state axis");
    c->add_option("--output-grid", o.output_grid, "grid points per output axis");
    c->add_option("--region", o.region, "state box lo:hi,lo:hi,...");
    c->add_option("--output-range", o.output_range, "output box lo:hi,...");
  };
  // global options are also accepted after the subcommand
  auto global_opts = [&](CLI::App* c) {
    c->add_option("--config", o.config, "problem file (JSON)");
    c->add_option("--example", o.example, "built-in example 1, 2 or 3")->check(CLI::Range(1, 3));
    c->add_option("--out", o.out, "output directory");
    c->add_option("--measure", o.measure, "l1 | l2 | linf");
    c->add_option("--seed", o.seed, "seed for the synthesis grid order");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate the plant; trajectory and events CSV, SVG plot");
  global_opts(simulate);
  sim_opts(simulate);

  auto* certify = app.add_subcommand("certify", "check the contraction conditions; certificate report");
  global_opts(certify);
  gain_opts(certify);
  cert_opts(certify);

  auto* observe = app.add_subcommand("observe", "plant + observer; error trace and envelope check");
  global_opts(observe);
  sim_opts(observe);
  gain_opts(observe);
  cert_opts(observe);
  observe->add_option("--xhat0", o.xhat0, "initial observer state");
  observe->add_option("--K", o.K, "envelope overshoot constant (>= 1)");
  observe->add_option("--slack", o.slack, "relative slack on the envelope");
  observe->add_option("--rate", o.rate, "envelope rate (default: certified rate)");
  observe->add_flag("--disturbance", o.disturbance, "also run the parameter disturbance study");

  auto* synth = app.add_subcommand("synth", "search observer gains maximizing the certified rate");
  global_opts(synth);
  gain_opts(synth);
  cert_opts(synth);
  synth->add_option("--freeze", o.freeze, "gain entries kept fixed, e.g. l2p,l2m");
  synth->add_option("--budget", o.budget, "maximum certificate evaluations");
  synth->add_option("--box", o.box, "gain bounds lo,hi");
  synth->add_option("--shared", o.shared, "same gain in both modes (true/false)");

  auto* regstudy = app.add_subcommand("regstudy", "distance of regularized solutions for decreasing eps");
  global_opts(regstudy);
  sim_opts(regstudy);
  regstudy->add_option("--eps", o.eps, "decreasing eps values, comma separated");
  regstudy->add_option("--transition", o.transition, "cubic | saturation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  Runner r(o, out, err);
  try {
    if (simulate->parsed()) return cmd_simulate(r);
    if (certify->parsed()) return cmd_certify(r);
    if (observe->parsed()) return cmd_observe(r);
    if (synth->parsed()) return cmd_synth(r, o.seed);
    if (regstudy->parsed()) return cmd_regstudy(r);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const DegenerateSliding& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const EvalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}

}  // namespace filcon::cli
