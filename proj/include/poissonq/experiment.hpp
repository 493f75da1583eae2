// experiment.hpp — Config-driven experiment runner: single simulations,
// parameter sweeps, Monte-Carlo validation against the trajectory oracle, and
// figure-reproduction presets. Emits CSV tables whose metadata preamble is
// itself a valid config (bit-exact reruns).

#pragma once

#include "poissonq/approx.hpp"
#include "poissonq/propagate.hpp"
#include "poissonq/schemes.hpp"
#include "poissonq/trajectories.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace poissonq::experiment {

// invalid configuration -> CLI exit code 2
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
// integration/diagnostic failure -> CLI exit code 3
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutputRequest {
  bool fidelity = true;
  bool purity = false;
  bool populations = false;
  bool coherences = false;
};

struct SweepSpec {
  std::string parameter;  // e.g. "noise.D", "scheme.T"
  std::vector<double> values;
};

struct ExperimentConfig {
  schemes::SchemeConfig scheme;
  std::optional<noise::NoiseModel> model;
  std::optional<noise::TwoLevelCoefficients> coefficients;
  propagate::IntegrationConfig integration;
  OutputRequest outputs;
  std::optional<SweepSpec> sweep;
  std::uint64_t seed = 0;

  liouville::NoiseSpec noise_spec() const;
  void validate() const;  // throws ConfigError naming the field
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical text form; parsing it back reproduces the config exactly.
std::string render_config(const ExperimentConfig& config);

void apply_override(ExperimentConfig& config, const std::string& parameter,
                    double value);

// --------------------------- result tables -----------------------------------

struct ResultTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string metadata;  // '#'-prefixed preamble body (config echo)
};

std::string csv_text(const ResultTable& table);
void write_csv(const ResultTable& table, const std::string& path);
// Extract the metadata preamble of a CSV back into config text.
std::string strip_metadata(const std::string& csv);

std::vector<std::string> write_tables(const std::vector<ResultTable>& tables,
                                      const std::string& outdir);

// --------------------------- operations --------------------------------------

// Single run or sweep, one table per requested observable.
std::vector<ResultTable> run_experiment(const ExperimentConfig& config);

struct ValidationOutcome {
  traj::ComparisonReport report;
  ResultTable table;  // time, deviation, std_error
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
};

ValidationOutcome validate_experiment(const ExperimentConfig& config,
                                      std::size_t n_traj, std::uint64_t seed);

std::vector<std::string> known_figures();
std::vector<ResultTable> reproduce_figure(const std::string& figure_id);

}  // namespace poissonq::experiment
