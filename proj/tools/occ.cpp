// occ: command-line front end for scenario validation, gain synthesis,
// simulation and the built-in reproduction run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "occ/errors.hpp"
#include "occ/repro.hpp"
#include "occ/report.hpp"
#include "occ/scenario_io.hpp"
#include "occ/sim.hpp"
#include "occ/synthesis.hpp"

namespace fs = std::filesystem;
using namespace occ;

namespace {

enum Exit { kOk = 0, kValidation = 1, kSynthesis = 2, kRuntime = 3 };

struct Overrides {
  std::optional<unsigned long long> seed;
  std::optional<double> step;
  std::optional<double> t_final;

  void apply(Scenario& s) const {
    if (seed) {
      s.sim.seed = *seed;
      s.learner.noise.seed = *seed;
    }
    if (step) s.sim.h = *step;
    if (t_final) s.sim.t_final = *t_final;
  }
};

// Stage failure carrying the exit code it maps to.
struct StageError : std::runtime_error {
  StageError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
  int code;
};

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw StageError(kRuntime, "cannot write " + p.string());
  return out;
}

template <typename Writer>
void write_file(const fs::path& p, Writer&& w) {
  std::ofstream out = open_out(p);
  w(out);
}

Scenario load(const std::string& path, const Overrides& ov) {
  Scenario s = load_scenario(path);
  ov.apply(s);
  check_scenario(s);
  return s;
}

bool print_validation(const ValidationReport& rep, std::ostream& out) {
  for (const Check& c : rep.checks) {
    out << (c.passed ? "pass  " : "FAIL  ") << c.name;
    if (!c.detail.empty()) out << ": " << c.detail;
    out << "\n";
  }
  out << (rep.ok() ? "all checks passed\n" : "validation failed\n");
  return rep.ok();
}

GainSet synthesize_or_throw(const Scenario& s) {
  try {
    return synthesize(s);
  } catch (const ValidationError& e) {
    throw StageError(kValidation, std::string("synthesize: ") + e.what());
  } catch (const std::exception& e) {
    throw StageError(kSynthesis, std::string("synthesize: ") + e.what());
  }
}

SimulationResult simulate_or_throw(const Scenario& s, const RunOptions& opts, const char* stage) {
  try {
    return run_scenario(s, opts);
  } catch (const std::exception& e) {
    throw StageError(kRuntime, std::string(stage) + ": " + e.what());
  }
}

fs::path learning_log_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".learning.csv");
  return p;
}

void write_learning_summary(std::ostream& out, const LearningOutcome& lo) {
  char line[256];
  std::snprintf(line, sizeof line, "observer gate opened at t = %.4g s\n", lo.gate_time);
  out << line;
  for (std::size_t i = 0; i < lo.followers.size(); ++i) {
    const FollowerLearning& f = lo.followers[i];
    std::snprintf(line, sizeof line,
                  "follower %zu: %s after %d iterations, %zu intervals, switch at %.4g s, "
                  "max |K_learned - K_model| = %.3g\n",
                  i + 1, f.learning.converged ? "converged" : "not converged", f.learning.iterations,
                  f.records.size(), f.switch_time, f.gain_error);
    out << line;
  }
}

int cmd_validate(const std::string& path, const Overrides& ov) {
  const Scenario s = load(path, ov);
  return print_validation(validate_scenario(s), std::cout) ? kOk : kValidation;
}

int cmd_synthesize(const std::string& path, const std::string& out_path, const Overrides& ov) {
  const Scenario s = load(path, ov);
  if (!validate_scenario(s).ok()) {
    print_validation(validate_scenario(s), std::cerr);
    return kValidation;
  }
  const GainSet g = synthesize_or_throw(s);
  print_gain_table(std::cout, g);
  open_out(out_path) << gain_report(s, g).dump(2) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return kOk;
}

int cmd_simulate(const std::string& path, const std::string& mode, const std::string& out_path,
                 const Overrides& ov) {
  const Scenario s = load(path, ov);
  const ValidationReport rep = validate_scenario(s);
  if (!rep.ok()) {
    print_validation(rep, std::cerr);
    return kValidation;
  }
  synthesize_or_throw(s);
  RunOptions opts;
  opts.mode = mode == "rl" ? RunMode::Learning : RunMode::Offline;
  const SimulationResult res = simulate_or_throw(s, opts, "simulate");
  write_file(out_path, [&](std::ostream& o) { write_trajectory_csv(o, s, res.trajectory); });
  std::cout << "wrote " << out_path << " (" << res.trajectory.t.size() << " rows)\n";
  std::printf("|e(0)| = %.6g, |e(t_final)| = %.6g\n", res.e_initial, res.e_final);
  if (res.learning) {
    const fs::path log = learning_log_path(out_path);
    write_file(log, [&](std::ostream& o) { write_learning_log(o, *res.learning); });
    write_learning_summary(std::cout, *res.learning);
    std::cout << "wrote " << log.string() << "\n";
  }
  return kOk;
}

int cmd_paper_repro(const std::string& dir, const Overrides& ov) {
  const fs::path root(dir);
  Scenario s = paper_scenario();
  ov.apply(s);
  std::ostringstream summary;

  std::cout << "== validate\n";
  const ValidationReport rep = validate_scenario(s);
  print_validation(rep, summary);
  if (!print_validation(rep, std::cout)) throw StageError(kValidation, "validate: checks failed");

  std::cout << "== synthesize\n";
  const GainSet g = synthesize_or_throw(s);
  print_gain_table(std::cout, g);
  print_gain_table(summary, g);
  open_out(root / "gains.json") << gain_report(s, g).dump(2) << "\n";

  std::cout << "== offline simulation\n";
  const SimulationResult off = simulate_or_throw(s, {}, "offline simulation");
  write_file(root / "offline.csv", [&](std::ostream& o) { write_trajectory_csv(o, s, off.trajectory); });
  std::printf("|e(0)| = %.6g, |e(t_final)| = %.6g\n", off.e_initial, off.e_final);

  std::cout << "== learning simulation\n";
  RunOptions rl_opts;
  rl_opts.mode = RunMode::Learning;
  const SimulationResult rl = simulate_or_throw(s, rl_opts, "learning simulation");
  write_file(root / "rl.csv", [&](std::ostream& o) { write_trajectory_csv(o, s, rl.trajectory); });
  write_file(root / "rl.learning.csv", [&](std::ostream& o) { write_learning_log(o, *rl.learning); });
  write_learning_summary(std::cout, *rl.learning);
  write_learning_summary(summary, *rl.learning);
  std::printf("|e(0)| = %.6g, |e(t_final)| = %.6g\n", rl.e_initial, rl.e_final);

  std::cout << "== acceptance\n";
  bool all = true;
  for (const CriterionResult& r : run_acceptance()) {
    const std::string line = format_result(r);
    std::cout << line << "\n";
    summary << line << "\n";
    all = all && r.passed;
  }
  open_out(root / "summary.txt") << summary.str();
  std::cout << "wrote " << (root / "summary.txt").string() << "\n";
  return all ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observer-based optimal output containment for heterogeneous multi-agent systems"};
  app.require_subcommand(1);
  Overrides ov;
  unsigned long long seed = 0;
  double step = 0.0, t_final = 0.0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for initial states and exploration noise");
  auto* step_opt = app.add_option("--step", step, "Integrator step size [s]")->check(CLI::PositiveNumber);
  auto* tf_opt = app.add_option("--t-final", t_final, "Simulation horizon [s]")->check(CLI::PositiveNumber);
  app.fallthrough();

  std::string file, out, mode = "offline";
  auto* validate = app.add_subcommand("validate", "Check topology, assumptions and gain bounds");
  validate->add_option("file", file, "Scenario file or builtin:paper")->required();

  auto* synth = app.add_subcommand("synthesize", "Compute all observer and controller gains");
  synth->add_option("file", file, "Scenario file or builtin:paper")->required();
  synth->add_option("-o,--output", out, "Gain report (JSON)")->default_str("gains.json");

  auto* sim = app.add_subcommand("simulate", "Simulate and write the trajectory CSV");
  sim->add_option("file", file, "Scenario file or builtin:paper")->required();
  sim->add_option("--mode", mode, "offline or rl")->check(CLI::IsMember({"offline", "rl"}));
  sim->add_option("-o,--output", out, "Trajectory CSV")->default_str("trajectory.csv");

  auto* repro = app.add_subcommand("paper-repro", "Run the built-in experiment end to end");
  repro->add_option("-o,--output", out, "Output directory")->default_str("repro");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) ov.seed = seed;
  if (*step_opt) ov.step = step;
  if (*tf_opt) ov.t_final = t_final;

  auto output_or = [&](const char* fallback) { return out.empty() ? std::string(fallback) : out; };
  try {
    if (*validate) return cmd_validate(file, ov);
    if (*synth) return cmd_synthesize(file, output_or("gains.json"), ov);
    if (*sim) return cmd_simulate(file, mode, output_or("trajectory.csv"), ov);
    if (*repro) return cmd_paper_repro(output_or("repro"), ov);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const SynthesisError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSynthesis;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
