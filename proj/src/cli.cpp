#include "posdwell/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "posdwell/analysis.hpp"
#include "posdwell/cert.hpp"
#include "posdwell/sim.hpp"
#include "posdwell/synthesis.hpp"

namespace posdwell::cli {

namespace {

class ConfigFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigFailure(msg);
}

AnalysisOptions analysis_options(const RunConfig& c) {
  AnalysisOptions o;
  o.margin = c.margin;
  if (c.max_boost) o.max_boost = *c.max_boost;
  o.dump_lp = c.dump_lp;
  return o;
}

SynthesisOptions synthesis_options(const RunConfig& c) {
  SynthesisOptions o;
  o.margin = c.margin;
  if (c.max_boost) o.max_boost = *c.max_boost;
  o.dump_lp = c.dump_lp;
  o.fixed_kd = c.fixed_kd;
  return o;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigFailure("cannot write " + path);
  f << text;
}

int analyze(const RunConfig& c, const AnySystem& sys, std::ostream& out) {
  const DwellTimeSpec d = DwellTimeSpec::parse(c.dwell);
  const AnalysisOptions o = analysis_options(c);
  Certificate cert;
  if (const auto* sw = std::get_if<SwitchedSystem>(&sys)) {
    require(d.kind == DwellTimeSpec::Kind::Minimum, "switched systems are analyzed under minimum:<T>");
    cert = analyze_switched_min(*sw, d.t_min, c.degree, o);
  } else {
    RangeMode mode = c.mu_variant ? RangeMode::MuVariant : RangeMode::Direct;
    const auto& s = std::get<ImpulsiveSystem>(sys);
    cert = d.kind == DwellTimeSpec::Kind::Range ? analyze_range(s, d.t_min, d.t_max, c.degree, mode, o)
                                                : analyze(s, d, c.degree, o);
  }
  out << "theorem: " << to_string(cert.kind) << " (" << d.to_string() << ", degree " << cert.degree
      << ", Handelman order +" << cert.handelman_boost << ")\n";
  out << "gamma = " << format_number(cert.gamma) << "\n";
  if (!c.output.empty()) {
    save_certificate(cert, c.output);
    out << "certificate: " << c.output << "\n";
  }
  return Ok;
}

int synthesize_cmd(const RunConfig& c, const AnySystem& sys, std::ostream& out) {
  const DwellTimeSpec d = DwellTimeSpec::parse(c.dwell);
  const SynthesisOptions o = synthesis_options(c);
  ControllerRealization ctrl;
  if (const auto* sw = std::get_if<SwitchedSystem>(&sys)) {
    require(d.kind == DwellTimeSpec::Kind::Minimum, "switched synthesis needs minimum:<T>");
    ctrl = synthesize_switched(*sw, d.t_min, c.degree, o);
  } else {
    ctrl = synthesize(std::get<ImpulsiveSystem>(sys), d, c.degree, o);
  }
  out << "controller: " << to_string(ctrl.kind) << " (" << d.to_string() << ", degree " << ctrl.degree
      << ")\n";
  out << "gamma = " << format_number(ctrl.gamma) << "\n";
  if (ctrl.kind != ControllerKind::SwitchedMinDT) {
    const Matrix Kd = realize_jump_gain(ctrl, ctrl.tau_end());
    out << "K_d(" << format_number(ctrl.tau_end()) << ") = [";
    for (int i = 0; i < Kd.rows(); ++i)
      for (int j = 0; j < Kd.cols(); ++j) out << (i || j ? (j ? " " : "; ") : "") << format_number(Kd(i, j));
    out << "]\n";
  }
  if (!c.output.empty()) {
    save_controller(ctrl, c.output);
    out << "controller file: " << c.output << "\n";
  }
  return Ok;
}

HybridModel model_for(const RunConfig& c, const AnySystem& sys, const DwellTimeSpec& d) {
  std::optional<ControllerRealization> ctrl;
  if (!c.controller_path.empty()) ctrl = load_controller(c.controller_path);
  if (const auto* sw = std::get_if<SwitchedSystem>(&sys)) {
    require(d.kind == DwellTimeSpec::Kind::Minimum, "switched systems need minimum:<T>");
    return ctrl ? closed_loop(*sw, *ctrl) : open_loop(*sw, d.t_min);
  }
  const auto& s = std::get<ImpulsiveSystem>(sys);
  return ctrl ? closed_loop(s, *ctrl) : open_loop(s, d.clamp());
}

int simulate_cmd(const RunConfig& c, const AnySystem& sys, std::ostream& out) {
  const DwellTimeSpec d = DwellTimeSpec::parse(c.dwell);
  const HybridModel m = model_for(c, sys, d);
  const SequenceGen gen = SequenceGen::for_dwell(d, c.seed);
  const InputKind ik = input_kind_from_string(c.inputs);
  SimOptions so;
  so.horizon = c.horizon;
  so.step = c.step;
  so.seed = c.seed;
  const Trajectory tr = simulate(m, gen, generate_inputs(ik, c.seed), Vector::Zero(m.n), so);

  GainOptions go;
  go.runs = c.runs;
  go.horizon = c.horizon;
  go.step = c.step;
  go.seed = c.seed;
  go.jobs = c.jobs;
  const double gain = estimate_gain(m, gen, go);

  out << "sequence: " << gen.to_string() << ", inputs: " << c.inputs << ", jumps: " << tr.total_jumps
      << "\n";
  out << "trajectory sup|z_c| = " << format_number(tr.sup_zc) << ", sup|z_d| = " << format_number(tr.sup_zd)
      << "\n";
  out << "empirical gain (" << c.runs << " runs, unit inputs) = " << format_number(gain) << "\n";
  if (!c.output.empty()) {
    write_trajectory_csv(tr, c.output + ".csv");
    write_jumps_csv(tr, c.output + "_jumps.csv");
    nlohmann::ordered_json j;
    j["system"] = c.system_path;
    j["controller"] = c.controller_path.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(c.controller_path);
    j["dwell"] = d.to_string();
    j["sequence"] = gen.to_string();
    j["seed"] = c.seed;
    j["inputs"] = c.inputs;
    j["horizon"] = c.horizon;
    j["step"] = so.step.value_or(default_step(gen));
    j["runs"] = c.runs;
    j["jumps"] = tr.total_jumps;
    j["empirical_gain"] = gain;
    write_file(c.output + ".json", j.dump(2) + "\n");
    out << "trajectory: " << c.output << ".csv, " << c.output << "_jumps.csv, " << c.output << ".json\n";
  }
  return Ok;
}

int certify(const RunConfig& c, const AnySystem& sys, std::ostream& out) {
  require(c.certificate_path.empty() != c.controller_path.empty(),
          "certify needs exactly one of --certificate or --controller");
  VerificationReport rep, disc;
  if (!c.certificate_path.empty()) {
    const Certificate cert = load_certificate(c.certificate_path);
    std::visit(
        [&](const auto& s) {
          rep = verify(cert, s, c.grid);
          disc = cross_check_discrete(cert, s);
        },
        sys);
  } else {
    const ControllerRealization ctrl = load_controller(c.controller_path);
    const Certificate cert = closed_loop_certificate(ctrl);
    std::visit(
        [&](const auto& s) {
          const HybridModel m = closed_loop(s, ctrl);
          rep = verify(ctrl, s, c.grid);
          disc = cross_check_discrete(cert, m);
        },
        sys);
  }
  for (const auto& [k, f] : disc.families) rep.families[k] = f;
  rep.phi_residual = disc.phi_residual;
  if (!disc.passed) {
    rep.passed = false;
    for (const auto& n : disc.notes) rep.notes.push_back("discrete: " + n);
  }
  out << rep.to_table();
  if (!rep.passed) out << "violated row: " << rep.worst_row() << "\n";
  if (!c.output.empty()) write_file(c.output, rep.to_json());
  return rep.passed ? Ok : Failed;
}

int sweep(const RunConfig& c, const AnySystem& sys, std::ostream& out, std::ostream& err) {
  const auto* s = std::get_if<ImpulsiveSystem>(&sys);
  const auto* sw = std::get_if<SwitchedSystem>(&sys);
  const std::string kind = c.dwell.substr(0, c.dwell.find(':'));
  require(kind == "constant" || kind == "minimum", "sweep needs --dwell constant or minimum");
  require(!sw || kind == "minimum", "switched sweeps use --dwell minimum");
  require(c.points >= 1 && c.from > 0.0 && c.to >= c.from, "sweep needs 0 < --from <= --to and --points >= 1");
  require(!c.output.empty(), "sweep needs --output");
  const AnalysisOptions o = analysis_options(c);

  std::vector<double> Ts(c.points), gammas(c.points, 0.0);
  std::vector<std::string> status(c.points, "ok");
  for (int k = 0; k < c.points; ++k)
    Ts[k] = c.points == 1 ? c.from : c.from + (c.to - c.from) * k / (c.points - 1);
  auto point = [&](int k) {
    try {
      if (sw)
        gammas[k] = analyze_switched_min(*sw, Ts[k], c.degree, o).gamma;
      else if (kind == "constant")
        gammas[k] = analyze_constant(*s, Ts[k], c.degree, o).gamma;
      else
        gammas[k] = analyze_minimum(*s, Ts[k], c.degree, o).gamma;
    } catch (const Infeasible&) {
      status[k] = "infeasible";
    } catch (const RelaxationLimit&) {
      status[k] = "relaxation_limit";
    } catch (const NumericalFailure&) {
      status[k] = "numerical_failure";
    }
  };
  const int jobs = std::max(1, std::min(c.jobs, c.points));
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      for (int k = j; k < c.points; k += jobs) point(k);
    });
  for (auto& t : pool) t.join();

  std::ofstream f(c.output, std::ios::binary);
  if (!f) throw ConfigFailure("cannot write " + c.output);
  f << "T,gamma,status\n";
  for (int k = 0; k < c.points; ++k) {
    f << format_number(Ts[k]) << "," << (status[k] == "ok" ? format_number(gammas[k]) : "") << ","
      << status[k] << "\n";
    out << "T = " << format_number(Ts[k]) << "  gamma = "
        << (status[k] == "ok" ? format_number(gammas[k]) : status[k]) << "\n";
    if (status[k] != "ok") err << "sweep: T = " << format_number(Ts[k]) << " " << status[k] << "\n";
  }
  out << "sweep: " << c.output << "\n";
  return Ok;
}

}  // namespace

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    require(!c.system_path.empty(), "--system is required");
    require(c.degree >= 0, "--degree must be nonnegative");
    require(c.jobs >= 1, "--jobs must be >= 1");
    const AnySystem sys = load_system(c.system_path);
    if (c.command == "analyze") return analyze(c, sys, out);
    if (c.command == "synthesize") return synthesize_cmd(c, sys, out);
    if (c.command == "simulate") return simulate_cmd(c, sys, out);
    if (c.command == "certify") return certify(c, sys, out);
    if (c.command == "sweep") return sweep(c, sys, out, err);
    throw ConfigFailure("unknown command '" + c.command + "'");
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << "\n";
    return InfeasibleExit;
  } catch (const RelaxationLimit& e) {
    err << "relaxation limit: " << e.what() << "\n";
    return NumericalExit;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return NumericalExit;
  } catch (const StepTooLarge& e) {
    err << "numerical failure: " << e.what() << "\n";
    return NumericalExit;
  } catch (const IllPosed& e) {
    err << "numerical failure: " << e.what() << "\n";
    return NumericalExit;
  } catch (const ConfigFailure& e) {
    err << "error: " << e.what() << "\n";
    return ConfigError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return ConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return ConfigError;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << "\n";
    return ConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return Failed;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Dwell-time analysis and synthesis for positive impulsive systems"};
  app.require_subcommand(1);
  RunConfig cfg;
  double margin = 0.0;
  int max_boost = 0;
  double step = 0.0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--system", cfg.system_path, "System JSON file")->required();
    sub->add_option("--dwell", cfg.dwell, "arbitrary | constant:<T> | minimum:<T> | range:<Tmin>:<Tmax>");
  };
  auto lp_flags = [&](CLI::App* sub) {
    sub->add_option("--degree", cfg.degree, "Polynomial degree of zeta (or X, U)");
    sub->add_option("--margin", margin, "Strict-row margin override");
    sub->add_option("--max-boost", max_boost, "Handelman order cap (above the row degree)");
    sub->add_option("--dump-lp", cfg.dump_lp, "Write the LP in CPLEX LP format");
  };

  auto* an = app.add_subcommand("analyze", "Compute a certified gain bound");
  common(an);
  lp_flags(an);
  an->add_option("--output", cfg.output, "Certificate JSON");
  an->add_flag("--mu-variant", cfg.mu_variant, "Range dwell time: use the mu conditions");

  auto* sy = app.add_subcommand("synthesize", "Synthesize a timer-dependent state feedback");
  common(sy);
  lp_flags(sy);
  sy->add_option("--output", cfg.output, "Controller JSON");
  sy->add_flag("--fixed-kd", cfg.fixed_kd, "Range dwell time: K_d independent of the dwell time");

  auto* si = app.add_subcommand("simulate", "Simulate and estimate the gain empirically");
  common(si);
  si->add_option("--controller", cfg.controller_path, "Controller JSON (closed loop)");
  si->add_option("--seed", cfg.seed, "Random seed");
  si->add_option("--runs", cfg.runs, "Monte-Carlo runs for the gain estimate");
  si->add_option("--horizon", cfg.horizon, "Simulation horizon");
  si->add_option("--step", step, "Integrator step");
  si->add_option("--inputs", cfg.inputs, "const_unit | sine | uniform_random | zero");
  si->add_option("--jobs", cfg.jobs, "Worker threads");
  si->add_option("--output", cfg.output, "Output prefix for CSV and JSON files");

  auto* ce = app.add_subcommand("certify", "Verify a certificate or controller");
  common(ce);
  ce->add_option("--certificate", cfg.certificate_path, "Certificate JSON");
  ce->add_option("--controller", cfg.controller_path, "Controller JSON");
  ce->add_option("--grid", cfg.grid, "Grid density per interval row");
  ce->add_option("--output", cfg.output, "Report JSON");

  auto* sw = app.add_subcommand("sweep", "Gain bound over a dwell-time grid");
  common(sw);
  lp_flags(sw);
  sw->add_option("--from", cfg.from, "First dwell time")->required();
  sw->add_option("--to", cfg.to, "Last dwell time")->required();
  sw->add_option("--points", cfg.points, "Number of grid points");
  sw->add_option("--jobs", cfg.jobs, "Worker threads");
  sw->add_option("--output", cfg.output, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ConfigError;
  }
  for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  auto* sub = app.get_subcommand(cfg.command);
  auto given = [&](const std::string& name) {
    const auto* o = sub->get_option_no_throw(name);
    return o && o->count() > 0;
  };
  if (given("--margin")) cfg.margin = margin;
  if (given("--max-boost")) cfg.max_boost = max_boost;
  if (given("--step")) cfg.step = step;
  return run(cfg, std::cout, std::cerr);
}

}  // namespace posdwell::cli
