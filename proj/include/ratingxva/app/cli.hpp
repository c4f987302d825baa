#pragma once

// Command-line front end: argument parsing and the exit-code mapping.

#include <algorithm>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ratingxva/app/commands.hpp"

namespace ratingxva::app {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kIo = 3 };

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App cli{"Stochastic rating-matrix simulation, calibration and XVA"};
  cli.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 0;
  cli.add_option("--config", config_path, "Run configuration file");
  auto* seed_opt = cli.add_option("--seed", seed, "Master seed (overrides the config)");
  auto* out_opt = cli.add_option("--out", out_dir, "Output directory (overrides the config)");
  cli.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"reconstruct", "Reconstruct, distance and adjusted matrices from a cohort matrix"},
      {"calibrate-hist", "Calibrate SDE parameters to a reconstructed matrix"},
      {"calibrate-rn", "Calibrate a change of measure to default probabilities"},
      {"simulate", "Simulate rating-matrix trajectories and check their properties"},
      {"ssa", "Nested simulation of rating paths"},
      {"xva", "CVA, DVA and BVA under the configured collateral regimes"},
      {"report", "Summarize a run directory"},
  };
  for (const auto& [name, help] : commands) cli.add_subcommand(name, help);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    cli.exit(e, out, err);
    return kValidation;
  }

  const std::string command = cli.get_subcommands().front()->get_name();
  try {
    set_thread_count(threads ? threads : std::max(1u, std::thread::hardware_concurrency()));
    if (command == "report") {
      const std::string dir = *out_opt ? out_dir : config_path.empty() ? "." : load_run_config(Config::load(config_path)).output_dir;
      out << cmd_report(dir);
      return kOk;
    }
    if (config_path.empty()) throw ValidationError("--config is required for '" + command + "'");
    const Config config = Config::load(config_path);
    Overrides overrides;
    if (*seed_opt) overrides.seed = seed;
    if (*out_opt) overrides.output_dir = out_dir;
    const RunConfig cfg = load_run_config(config, overrides);
    Run run(command, cfg, read_file(config_path));
    if (command == "reconstruct") cmd_reconstruct(run);
    else if (command == "calibrate-hist") cmd_calibrate_hist(run);
    else if (command == "calibrate-rn") cmd_calibrate_rn(run);
    else if (command == "simulate") cmd_simulate(run);
    else if (command == "ssa") cmd_ssa(run);
    else if (command == "xva") cmd_xva(run);
    out << command << ": outputs in " << cfg.output_dir << "\n";
    return kOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed summary: " << e.what() << "\n";
    return kIo;
  }
}

}  // namespace ratingxva::app
