// poissonq command line: run configured experiments, validate the master
// equation against the stochastic trajectory oracle, and reproduce the
// built-in figure presets.
//
// exit codes: 0 success (validation passed), 1 validation criterion failed,
//             2 configuration error, 3 numerical failure

#include "CLI11.hpp"

#include "poissonq/experiment.hpp"

#include <iostream>

using namespace poissonq;

int main(int argc, char** argv) {
  CLI::App app{"Quantum dynamics under classical Poisson white noise"};
  app.require_subcommand(1);

  std::string config_path;
  std::string outdir = ".";

  auto* run_cmd = app.add_subcommand(
      "run", "Integrate a configured experiment and emit CSV tables");
  run_cmd->add_option("config", config_path, "experiment config file")
      ->required();
  run_cmd->add_option("--out", outdir, "output directory (default: .)");

  std::size_t n_traj = 1000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  auto* validate_cmd = app.add_subcommand(
      "validate",
      "Compare the master equation against a Monte-Carlo trajectory ensemble");
  validate_cmd->add_option("config", config_path, "experiment config file")
      ->required();
  validate_cmd->add_option("--traj", n_traj, "number of trajectories")
      ->capture_default_str();
  validate_cmd->add_option("--seed", seed, "ensemble seed (default: config)")
      ->each([&](const std::string&) { seed_given = true; });
  validate_cmd->add_option("--out", outdir, "output directory (default: .)");

  std::string figure_id;
  auto* reproduce_cmd = app.add_subcommand(
      "reproduce", "Emit the parameter grids of a built-in figure preset");
  reproduce_cmd
      ->add_option("figure", figure_id,
                   "figure id: fig1a fig1b fig2a fig2b fig3a fig3b fig4 "
                   "fig5a fig5b fig6a fig6b fig6c")
      ->required();
  reproduce_cmd->add_option("--out", outdir, "output directory (default: .)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      auto config = experiment::parse_config_file(config_path);
      auto tables = experiment::run_experiment(config);
      for (const auto& path : experiment::write_tables(tables, outdir)) {
        std::cout << path << "\n";
      }
      return 0;
    }
    if (validate_cmd->parsed()) {
      auto config = experiment::parse_config_file(config_path);
      if (!seed_given) seed = config.seed;
      auto outcome = experiment::validate_experiment(config, n_traj, seed);
      for (const auto& path :
           experiment::write_tables({outcome.table}, outdir)) {
        std::cout << path << "\n";
      }
      std::cout << "n_traj = " << outcome.n_traj << ", seed = " << outcome.seed
                << ", max deviation = " << outcome.report.max_deviation
                << ", fraction within 3 sigma = "
                << outcome.report.fraction_within << "\n";
      std::cout << (outcome.report.pass ? "PASS" : "FAIL") << "\n";
      return outcome.report.pass ? 0 : 1;
    }
    auto tables = experiment::reproduce_figure(figure_id);
    for (const auto& path : experiment::write_tables(tables, outdir)) {
      std::cout << path << "\n";
    }
    return 0;
  } catch (const experiment::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
