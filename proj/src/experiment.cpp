#include "poissonq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace poissonq::experiment {

namespace {

using qcore::Complex;
using qcore::Matrix;
using qcore::Vector;

std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

double parse_number(const std::string& text, const std::string& field) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ConfigError(field + ": not a number ('" + text + "')");
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// --------------------------- key-value config text ----------------------------

struct ConfigMap {
  std::map<std::string, std::map<std::string, std::string>> sections;
  mutable std::map<std::string, std::map<std::string, bool>> consumed;

  static ConfigMap parse(const std::string& text) {
    ConfigMap map;
    std::stringstream stream(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(stream, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": malformed section header");
        }
        section = trim(line.substr(1, line.size() - 2));
        map.sections[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (section.empty()) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": key '" + key + "' outside any section");
      }
      if (map.sections[section].count(key)) {
        throw ConfigError(section + "." + key + ": duplicate key");
      }
      map.sections[section][key] = value;
    }
    return map;
  }

  bool has(const std::string& section, const std::string& key) const {
    auto sec = sections.find(section);
    return sec != sections.end() && sec->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key) const {
    consumed[section][key] = true;
    return sections.at(section).at(key);
  }

  double number(const std::string& section, const std::string& key,
                double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_number(get(section, key), section + "." + key);
  }

  void check_all_consumed() const {
    static const char* known_sections[] = {"scheme", "noise", "integration",
                                           "outputs", "sweep", "run"};
    for (const auto& [section, keys] : sections) {
      if (std::find_if(std::begin(known_sections), std::end(known_sections),
                       [&](const char* s) { return section == s; }) ==
          std::end(known_sections)) {
        throw ConfigError("[" + section + "]: unknown section");
      }
      for (const auto& [key, value] : keys) {
        if (!consumed[section][key]) {
          throw ConfigError(section + "." + key + ": unknown key");
        }
      }
    }
  }
};

std::vector<double> parse_sweep_values(const std::string& text) {
  const std::string trimmed = trim(text);
  for (const char* fn : {"logspace", "linspace"}) {
    if (trimmed.rfind(fn, 0) == 0) {
      const auto open = trimmed.find('(');
      const auto close = trimmed.rfind(')');
      if (open == std::string::npos || close == std::string::npos ||
          close < open) {
        throw ConfigError("sweep.values: malformed " + std::string(fn));
      }
      auto args = split_list(trimmed.substr(open + 1, close - open - 1));
      if (args.size() != 3) {
        throw ConfigError("sweep.values: " + std::string(fn) +
                          " needs (start, stop, count)");
      }
      const double start = parse_number(args[0], "sweep.values");
      const double stop = parse_number(args[1], "sweep.values");
      const long count = std::lround(parse_number(args[2], "sweep.values"));
      if (count < 2) throw ConfigError("sweep.values: count must be >= 2");
      std::vector<double> values(count);
      if (std::string(fn) == "logspace") {
        if (!(start > 0.0) || !(stop > 0.0)) {
          throw ConfigError("sweep.values: logspace needs positive bounds");
        }
        const double ratio = std::log(stop / start) / (count - 1);
        for (long i = 0; i < count; ++i) values[i] = start * std::exp(ratio * i);
      } else {
        const double step = (stop - start) / (count - 1);
        for (long i = 0; i < count; ++i) values[i] = start + step * i;
      }
      values.back() = stop;
      return values;
    }
  }
  std::vector<double> values;
  for (const auto& item : split_list(trimmed)) {
    values.push_back(parse_number(item, "sweep.values"));
  }
  if (values.empty()) throw ConfigError("sweep.values: empty list");
  return values;
}

// --------------------------- worker pool --------------------------------------

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(traj::worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& thread : pool) thread.join();
  if (error) std::rethrow_exception(error);
}

// --------------------------- observables --------------------------------------

double purity_of(const Matrix& rho) { return (rho * rho).trace().real(); }

struct SingleRun {
  propagate::PropagationRecord record;
  qcore::EigenFrame frame;  // h0 frame along the record grid
  int target_label = 0;
};

SingleRun run_single(const ExperimentConfig& config) {
  auto ops = schemes::make_operators(config.scheme);
  auto frame0 = qcore::track_eigenframe(
      ops.h0, qcore::uniform_grid(0.0, config.scheme.total_time, 801));
  const Vector start = frame0.vectors.front().col(ops.target_label);
  auto rho0 = qcore::DensityMatrix::pure(start);

  SingleRun run;
  run.target_label = ops.target_label;
  if (config.model) {
    run.record = propagate::integrate_master(ops.h0, ops.h1, *config.model,
                                             rho0, config.scheme.total_time,
                                             config.integration);
  } else {
    run.record = propagate::integrate_two_level(ops.h0, ops.h1,
                                                *config.coefficients, rho0,
                                                config.scheme.total_time,
                                                config.integration);
  }
  if (run.record.failed) {
    throw NumericalError("integration failed: " + run.record.failure_reason);
  }
  run.frame = qcore::track_eigenframe(ops.h0, run.record.times);
  return run;
}

}  // namespace

// --------------------------- ExperimentConfig ---------------------------------

liouville::NoiseSpec ExperimentConfig::noise_spec() const {
  if (model) return *model;
  return *coefficients;
}

void ExperimentConfig::validate() const {
  try {
    scheme.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (model.has_value() == coefficients.has_value()) {
    throw ConfigError(
        "noise: exactly one of a model (nu, distribution) or a (J, D) pair "
        "must be given");
  }
  if (coefficients && scheme.id == "stirap") {
    throw ConfigError(
        "noise: (J, D) coefficients apply to two-level schemes only; stirap "
        "needs nu and a distribution");
  }
  if (coefficients && coefficients->D < 0.0) {
    throw ConfigError("noise.D: must be >= 0");
  }
  if (!(integration.rel_tol > 0.0) || !(integration.abs_tol > 0.0)) {
    throw ConfigError("integration.rel_tol/abs_tol: must be > 0");
  }
  if (sweep) {
    if (sweep->values.empty()) throw ConfigError("sweep.values: empty");
    ExperimentConfig probe = *this;
    probe.sweep.reset();
    apply_override(probe, sweep->parameter, sweep->values.front());
  }
  if (!outputs.fidelity && !outputs.purity && !outputs.populations &&
      !outputs.coherences) {
    throw ConfigError("outputs.observables: at least one observable required");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ConfigMap map = ConfigMap::parse(text);
  ExperimentConfig config;

  if (!map.has("scheme", "id")) throw ConfigError("scheme.id: required");
  config.scheme.id = map.get("scheme", "id");
  config.scheme.omega0 = map.number("scheme", "omega0", 1.0);
  config.scheme.omega = map.number("scheme", "omega", 0.4);
  config.scheme.delta0 = map.number("scheme", "delta0", 1.0);
  config.scheme.total_time = map.number("scheme", "T", 20.0);
  config.scheme.tau = map.number("scheme", "tau", 0.1);
  config.scheme.c = map.number("scheme", "c", 0.0);
  if (map.has("scheme", "h1")) config.scheme.h1_variant = map.get("scheme", "h1");

  const bool has_jd = map.has("noise", "J") || map.has("noise", "D");
  const bool has_model = map.has("noise", "nu") || map.has("noise", "distribution");
  if (has_jd && has_model) {
    throw ConfigError(
        "noise: exactly one of a model (nu, distribution) or a (J, D) pair "
        "must be given");
  }
  if (has_jd) {
    noise::TwoLevelCoefficients coeffs;
    coeffs.J = map.number("noise", "J", 0.0);
    coeffs.D = map.number("noise", "D", 0.0);
    config.coefficients = coeffs;
  } else if (has_model) {
    if (!map.has("noise", "nu")) throw ConfigError("noise.nu: required");
    if (!map.has("noise", "distribution")) {
      throw ConfigError("noise.distribution: required");
    }
    const double nu = map.number("noise", "nu", 0.0);
    const std::string kind = map.get("noise", "distribution");
    try {
      if (kind == "laplace") {
        config.model = noise::NoiseModel(
            nu, noise::StrikeDistribution::laplace(
                    map.number("noise", "scale", 1.0)));
      } else if (kind == "gaussian") {
        config.model = noise::NoiseModel(
            nu, noise::StrikeDistribution::gaussian(
                    map.number("noise", "mean", 0.0),
                    map.number("noise", "sigma", 1.0)));
      } else if (kind == "point_mass") {
        config.model = noise::NoiseModel(
            nu, noise::StrikeDistribution::point_mass(
                    map.number("noise", "value", 0.0)));
      } else {
        throw ConfigError(
            "noise.distribution: must be laplace, gaussian or point_mass "
            "(got '" + kind + "')");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("noise: ") + e.what());
    }
  } else {
    throw ConfigError(
        "noise: exactly one of a model (nu, distribution) or a (J, D) pair "
        "must be given");
  }

  config.integration.rel_tol = map.number("integration", "rel_tol", 1e-9);
  config.integration.abs_tol = map.number("integration", "abs_tol", 1e-11);
  config.integration.max_step = map.number("integration", "max_step", 0.0);
  config.integration.initial_step =
      map.number("integration", "initial_step", 0.0);
  config.integration.monitor_interval =
      map.number("integration", "monitor_interval", 0.0);

  if (map.has("outputs", "observables")) {
    config.outputs = OutputRequest{false, false, false, false};
    for (const auto& item : split_list(map.get("outputs", "observables"))) {
      if (item == "fidelity") {
        config.outputs.fidelity = true;
      } else if (item == "purity") {
        config.outputs.purity = true;
      } else if (item == "populations") {
        config.outputs.populations = true;
      } else if (item == "coherences") {
        config.outputs.coherences = true;
      } else {
        throw ConfigError("outputs.observables: unknown observable '" + item +
                          "'");
      }
    }
  }

  if (map.sections.count("sweep")) {
    SweepSpec sweep;
    if (!map.has("sweep", "parameter")) {
      throw ConfigError("sweep.parameter: required");
    }
    sweep.parameter = map.get("sweep", "parameter");
    if (!map.has("sweep", "values")) throw ConfigError("sweep.values: required");
    sweep.values = parse_sweep_values(map.get("sweep", "values"));
    config.sweep = std::move(sweep);
  }

  const double seed = map.number("run", "seed", 0.0);
  config.seed = static_cast<std::uint64_t>(seed);

  map.check_all_consumed();
  config.validate();
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string render_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "[scheme]\n";
  out << "id = " << config.scheme.id << "\n";
  out << "omega0 = " << format_number(config.scheme.omega0) << "\n";
  if (config.scheme.id == "phase") {
    out << "omega = " << format_number(config.scheme.omega) << "\n";
  }
  if (config.scheme.id == "rap") {
    out << "delta0 = " << format_number(config.scheme.delta0) << "\n";
  }
  out << "T = " << format_number(config.scheme.total_time) << "\n";
  if (config.scheme.id == "stirap") {
    out << "tau = " << format_number(config.scheme.tau) << "\n";
  }
  out << "h1 = " << config.scheme.h1_variant << "\n";
  if (config.scheme.h1_variant == "timing_frequency") {
    out << "c = " << format_number(config.scheme.c) << "\n";
  }

  out << "\n[noise]\n";
  if (config.coefficients) {
    out << "J = " << format_number(config.coefficients->J) << "\n";
    out << "D = " << format_number(config.coefficients->D) << "\n";
  } else {
    out << "nu = " << format_number(config.model->nu) << "\n";
    const auto& dist = config.model->distribution;
    switch (dist.kind()) {
      case noise::StrikeDistribution::Kind::laplace:
        out << "distribution = laplace\n";
        out << "scale = " << format_number(dist.scale()) << "\n";
        break;
      case noise::StrikeDistribution::Kind::gaussian:
        out << "distribution = gaussian\n";
        out << "mean = " << format_number(dist.mean()) << "\n";
        out << "sigma = " << format_number(dist.sigma()) << "\n";
        break;
      case noise::StrikeDistribution::Kind::point_mass:
        out << "distribution = point_mass\n";
        out << "value = " << format_number(dist.value()) << "\n";
        break;
      default:
        throw ConfigError("render_config: custom distributions have no text form");
    }
  }

  out << "\n[integration]\n";
  out << "rel_tol = " << format_number(config.integration.rel_tol) << "\n";
  out << "abs_tol = " << format_number(config.integration.abs_tol) << "\n";
  if (config.integration.max_step > 0.0) {
    out << "max_step = " << format_number(config.integration.max_step) << "\n";
  }
  if (config.integration.initial_step > 0.0) {
    out << "initial_step = " << format_number(config.integration.initial_step)
        << "\n";
  }
  if (config.integration.monitor_interval > 0.0) {
    out << "monitor_interval = "
        << format_number(config.integration.monitor_interval) << "\n";
  }

  out << "\n[outputs]\n";
  out << "observables = ";
  bool first = true;
  auto emit = [&](bool enabled, const char* name) {
    if (!enabled) return;
    if (!first) out << ", ";
    out << name;
    first = false;
  };
  emit(config.outputs.fidelity, "fidelity");
  emit(config.outputs.purity, "purity");
  emit(config.outputs.populations, "populations");
  emit(config.outputs.coherences, "coherences");
  out << "\n";

  if (config.sweep) {
    out << "\n[sweep]\n";
    out << "parameter = " << config.sweep->parameter << "\n";
    out << "values = ";
    for (std::size_t i = 0; i < config.sweep->values.size(); ++i) {
      if (i) out << ", ";
      out << format_number(config.sweep->values[i]);
    }
    out << "\n";
  }

  out << "\n[run]\n";
  out << "seed = " << config.seed << "\n";
  return out.str();
}

void apply_override(ExperimentConfig& config, const std::string& parameter,
                    double value) {
  auto need_jd = [&]() -> noise::TwoLevelCoefficients& {
    if (!config.coefficients) {
      throw ConfigError("sweep.parameter: '" + parameter +
                        "' needs (J, D) noise");
    }
    return *config.coefficients;
  };
  auto need_model = [&]() -> noise::NoiseModel& {
    if (!config.model) {
      throw ConfigError("sweep.parameter: '" + parameter +
                        "' needs a noise model");
    }
    return *config.model;
  };
  auto rebuild = [&](noise::StrikeDistribution dist) {
    config.model = noise::NoiseModel(config.model->nu, std::move(dist));
  };

  try {
    if (parameter == "noise.D") {
      need_jd().D = value;
    } else if (parameter == "noise.J") {
      need_jd().J = value;
    } else if (parameter == "noise.nu") {
      config.model = noise::NoiseModel(value, need_model().distribution);
    } else if (parameter == "noise.sigma") {
      rebuild(noise::StrikeDistribution::gaussian(
          need_model().distribution.mean(), value));
    } else if (parameter == "noise.mean") {
      rebuild(noise::StrikeDistribution::gaussian(
          value, need_model().distribution.sigma()));
    } else if (parameter == "noise.scale") {
      need_model();
      rebuild(noise::StrikeDistribution::laplace(value));
    } else if (parameter == "noise.value") {
      need_model();
      rebuild(noise::StrikeDistribution::point_mass(value));
    } else if (parameter == "scheme.T") {
      config.scheme.total_time = value;
    } else if (parameter == "scheme.delta0") {
      config.scheme.delta0 = value;
    } else if (parameter == "scheme.omega") {
      config.scheme.omega = value;
    } else if (parameter == "scheme.tau") {
      config.scheme.tau = value;
    } else if (parameter == "scheme.c") {
      config.scheme.c = value;
    } else if (parameter == "scheme.omega0") {
      config.scheme.omega0 = value;
    } else {
      throw ConfigError("sweep.parameter: unknown parameter '" + parameter +
                        "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sweep: " + std::string(e.what()));
  }
}

// --------------------------- result tables -----------------------------------

std::string csv_text(const ResultTable& table) {
  std::ostringstream out;
  std::stringstream meta(table.metadata);
  std::string line;
  while (std::getline(meta, line)) out << "# " << line << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ",";
    out << table.header[i];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << format_number(row[i]);
    }
    out << "\n";
  }
  return out.str();
}

void write_csv(const ResultTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << csv_text(table);
}

std::string strip_metadata(const std::string& csv) {
  std::stringstream stream(csv);
  std::string line;
  std::ostringstream out;
  while (std::getline(stream, line)) {
    if (line.rfind("# ", 0) == 0) {
      out << line.substr(2) << "\n";
    } else if (line == "#") {
      out << "\n";
    }
  }
  return out.str();
}

std::vector<std::string> write_tables(const std::vector<ResultTable>& tables,
                                      const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  std::vector<std::string> paths;
  paths.reserve(tables.size());
  for (const auto& table : tables) {
    std::string path = outdir + "/" + table.name + ".csv";
    write_csv(table, path);
    paths.push_back(std::move(path));
  }
  return paths;
}

// --------------------------- run ----------------------------------------------

std::vector<ResultTable> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::string metadata = render_config(config);

  std::vector<ResultTable> tables;
  if (!config.sweep) {
    SingleRun run = run_single(config);
    const auto& record = run.record;
    const Eigen::Index d = record.states.front().rows();

    auto new_table = [&](const std::string& name,
                         std::vector<std::string> header) {
      ResultTable table;
      table.name = name;
      table.header = std::move(header);
      table.metadata = metadata;
      table.rows.reserve(record.times.size());
      return table;
    };

    if (config.outputs.fidelity) {
      auto table = new_table("fidelity", {"time", "fidelity"});
      for (std::size_t k = 0; k < record.times.size(); ++k) {
        table.rows.push_back(
            {record.times[k],
             approx::fidelity(record.states[k],
                              run.frame.vectors[k].col(run.target_label))});
      }
      tables.push_back(std::move(table));
    }
    if (config.outputs.purity) {
      auto table = new_table("purity", {"time", "purity"});
      for (std::size_t k = 0; k < record.times.size(); ++k) {
        table.rows.push_back({record.times[k], purity_of(record.states[k])});
      }
      tables.push_back(std::move(table));
    }
    if (config.outputs.populations) {
      std::vector<std::string> header{"time"};
      for (Eigen::Index i = 0; i < d; ++i) {
        header.push_back("p" + std::to_string(i));
      }
      auto table = new_table("populations", std::move(header));
      for (std::size_t k = 0; k < record.times.size(); ++k) {
        std::vector<double> row{record.times[k]};
        for (Eigen::Index i = 0; i < d; ++i) {
          row.push_back(record.states[k](i, i).real());
        }
        table.rows.push_back(std::move(row));
      }
      tables.push_back(std::move(table));
    }
    if (config.outputs.coherences) {
      std::vector<std::string> header{"time"};
      for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
          header.push_back("re_" + std::to_string(i) + std::to_string(j));
          header.push_back("im_" + std::to_string(i) + std::to_string(j));
        }
      }
      auto table = new_table("coherences", std::move(header));
      for (std::size_t k = 0; k < record.times.size(); ++k) {
        std::vector<double> row{record.times[k]};
        for (Eigen::Index i = 0; i < d; ++i) {
          for (Eigen::Index j = i + 1; j < d; ++j) {
            row.push_back(record.states[k](i, j).real());
            row.push_back(record.states[k](i, j).imag());
          }
        }
        table.rows.push_back(std::move(row));
      }
      tables.push_back(std::move(table));
    }
    return tables;
  }

  // sweep: one row per value, final-time observables
  const auto& sweep = *config.sweep;
  struct PointResult {
    double fidelity = 0.0;
    double purity = 0.0;
    std::vector<double> populations;
    std::vector<double> coherences;
    Eigen::Index dim = 0;
  };
  std::vector<PointResult> points(sweep.values.size());

  parallel_for(sweep.values.size(), [&](std::size_t i) {
    ExperimentConfig point_config = config;
    point_config.sweep.reset();
    apply_override(point_config, sweep.parameter, sweep.values[i]);
    SingleRun run = run_single(point_config);
    const Matrix& final_state = run.record.final_state();
    PointResult result;
    result.dim = final_state.rows();
    result.fidelity = approx::fidelity(
        final_state, run.frame.vectors.back().col(run.target_label));
    result.purity = purity_of(final_state);
    for (Eigen::Index n = 0; n < result.dim; ++n) {
      result.populations.push_back(final_state(n, n).real());
    }
    for (Eigen::Index n = 0; n < result.dim; ++n) {
      for (Eigen::Index m = n + 1; m < result.dim; ++m) {
        result.coherences.push_back(final_state(n, m).real());
        result.coherences.push_back(final_state(n, m).imag());
      }
    }
    points[i] = std::move(result);
  });

  const Eigen::Index d = points.front().dim;
  if (config.outputs.fidelity) {
    ResultTable table{"fidelity", {sweep.parameter, "fidelity"}, {}, metadata};
    for (std::size_t i = 0; i < points.size(); ++i) {
      table.rows.push_back({sweep.values[i], points[i].fidelity});
    }
    tables.push_back(std::move(table));
  }
  if (config.outputs.purity) {
    ResultTable table{"purity", {sweep.parameter, "purity"}, {}, metadata};
    for (std::size_t i = 0; i < points.size(); ++i) {
      table.rows.push_back({sweep.values[i], points[i].purity});
    }
    tables.push_back(std::move(table));
  }
  if (config.outputs.populations) {
    std::vector<std::string> header{sweep.parameter};
    for (Eigen::Index i = 0; i < d; ++i) header.push_back("p" + std::to_string(i));
    ResultTable table{"populations", std::move(header), {}, metadata};
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::vector<double> row{sweep.values[i]};
      row.insert(row.end(), points[i].populations.begin(),
                 points[i].populations.end());
      table.rows.push_back(std::move(row));
    }
    tables.push_back(std::move(table));
  }
  if (config.outputs.coherences) {
    std::vector<std::string> header{sweep.parameter};
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        header.push_back("re_" + std::to_string(i) + std::to_string(j));
        header.push_back("im_" + std::to_string(i) + std::to_string(j));
      }
    }
    ResultTable table{"coherences", std::move(header), {}, metadata};
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::vector<double> row{sweep.values[i]};
      row.insert(row.end(), points[i].coherences.begin(),
                 points[i].coherences.end());
      table.rows.push_back(std::move(row));
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

// --------------------------- validate ------------------------------------------

ValidationOutcome validate_experiment(const ExperimentConfig& config,
                                      std::size_t n_traj, std::uint64_t seed) {
  config.validate();
  if (!config.model) {
    throw ConfigError(
        "validate: noise must be given as a model (nu, distribution); "
        "sampling needs the distribution");
  }
  if (config.sweep) {
    throw ConfigError("validate: sweeps are not supported here");
  }

  auto ops = schemes::make_operators(config.scheme);
  auto frame0 = qcore::track_eigenframe(
      ops.h0, qcore::uniform_grid(0.0, config.scheme.total_time, 801));
  auto rho0 =
      qcore::DensityMatrix::pure(frame0.vectors.front().col(ops.target_label));

  auto record = propagate::integrate_master(ops.h0, ops.h1, *config.model,
                                            rho0, config.scheme.total_time,
                                            config.integration);
  if (record.failed) {
    throw NumericalError("integration failed: " + record.failure_reason);
  }
  auto ensemble =
      traj::average_ensemble(ops.h0, ops.h1, *config.model, rho0,
                             config.scheme.total_time, n_traj, seed,
                             config.integration);

  ValidationOutcome outcome;
  outcome.report = traj::compare_to_master(ensemble, record);
  outcome.n_traj = n_traj;
  outcome.seed = seed;

  std::ostringstream meta;
  meta << render_config(config);
  meta << "\nvalidate: n_traj = " << n_traj << ", seed = " << seed
       << ", max_deviation = " << format_number(outcome.report.max_deviation)
       << ", fraction_within = "
       << format_number(outcome.report.fraction_within)
       << ", result = " << (outcome.report.pass ? "PASS" : "FAIL") << "\n";

  outcome.table.name = "validation";
  outcome.table.header = {"time", "deviation", "std_error"};
  outcome.table.metadata = meta.str();
  for (std::size_t k = 0; k < ensemble.times.size(); ++k) {
    outcome.table.rows.push_back({ensemble.times[k],
                                  outcome.report.deviation[k],
                                  ensemble.std_error[k]});
  }
  return outcome;
}

// --------------------------- figure presets ------------------------------------

namespace {

ExperimentConfig base_config(const std::string& scheme_id) {
  ExperimentConfig config;
  config.scheme.id = scheme_id;
  config.coefficients = noise::TwoLevelCoefficients{0.0, 0.0};
  return config;
}

ResultTable renamed(ResultTable table, const std::string& name,
                    const std::string& preset) {
  table.name = name;
  table.metadata = "reproduce: " + preset + "\n" + table.metadata;
  return table;
}

std::string compact_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

// exact + small-noise + naive + second-order overlays of a final-time
// fidelity against the (J, D) noise strength for a two-level scheme
std::vector<ResultTable> rap_fidelity_family(
    const std::string& preset, const ExperimentConfig& base,
    const std::vector<double>& d_values, bool with_strong) {
  std::vector<ResultTable> tables;

  ExperimentConfig swept = base;
  swept.sweep = SweepSpec{"noise.D", d_values};
  auto exact_tables = run_experiment(swept);
  tables.push_back(renamed(exact_tables.front(), preset + "_exact", preset));

  auto ops = schemes::make_operators(base.scheme);
  const double horizon = base.scheme.total_time;
  auto grid = qcore::uniform_grid(0.0, horizon, 8001);
  liouville::NoiseSpec unit_d = noise::TwoLevelCoefficients{0.0, 1.0};
  auto path = liouville::build_noise_eigenbasis_path(ops.h0, ops.h1, unit_d, grid);
  auto h0_frame = qcore::track_eigenframe(ops.h0, grid);
  const Vector start = h0_frame.vectors.front().col(ops.target_label);
  const Vector target = h0_frame.vectors.back().col(ops.target_label);
  auto rho0 = qcore::DensityMatrix::pure(start);

  // weak-noise line F(0) + D F'(0)
  auto noiseless = propagate::integrate_two_level(
      ops.h0, ops.h1, {0.0, 0.0}, rho0, horizon, base.integration);
  if (noiseless.failed) throw NumericalError(noiseless.failure_reason);
  const double f0 = approx::fidelity(noiseless.final_state(), target);
  const double slope = approx::noise_sensitivity(
      ops.h0, ops.h1, unit_d, rho0, target, horizon, base.integration);
  ResultTable weak{preset + "_weak", {"noise.D", "fidelity"}, {}, ""};
  for (double d : d_values) {
    weak.rows.push_back({d, approx::weak_noise_fidelity(f0, slope, d)});
  }
  weak.metadata = "reproduce: " + preset + "\n" + render_config(base);
  tables.push_back(std::move(weak));

  // naive strong noise (full axis)
  ResultTable naive{preset + "_naive", {"noise.D", "fidelity"}, {}, ""};
  naive.rows.resize(d_values.size());
  parallel_for(d_values.size(), [&](std::size_t i) {
    liouville::NoiseSpec spec = noise::TwoLevelCoefficients{0.0, d_values[i]};
    auto record = approx::naive_strong_noise(ops.h1, spec, rho0, horizon,
                                             base.integration);
    if (record.failed) throw NumericalError(record.failure_reason);
    naive.rows[i] = {d_values[i],
                     approx::fidelity(record.final_state(), target)};
  });
  naive.metadata = "reproduce: " + preset + "\n" + render_config(base);
  tables.push_back(std::move(naive));

  if (with_strong) {
    // second-order strong noise, plotted in the strong regime D >= 1
    ResultTable strong{preset + "_strong2", {"noise.D", "fidelity"}, {}, ""};
    for (double d : d_values) {
      if (d < 1.0) continue;
      liouville::NoiseSpec spec = noise::TwoLevelCoefficients{0.0, d};
      auto result = approx::strong_noise_second_order(
          liouville::replace_betas(path, spec), rho0, target);
      strong.rows.push_back({d, result.fidelity_value});
    }
    strong.metadata = "reproduce: " + preset + "\n" + render_config(base);
    tables.push_back(std::move(strong));
  }
  return tables;
}

// exact + small-noise + second-order overlays against nu for STIRAP
std::vector<ResultTable> stirap_fidelity_family(
    const std::string& preset, const ExperimentConfig& base,
    const std::vector<double>& nu_values) {
  std::vector<ResultTable> tables;

  ExperimentConfig swept = base;
  swept.sweep = SweepSpec{"noise.nu", nu_values};
  auto exact_tables = run_experiment(swept);
  tables.push_back(renamed(exact_tables.front(), preset + "_exact", preset));

  auto ops = schemes::make_operators(base.scheme);
  const double horizon = base.scheme.total_time;
  auto grid = qcore::uniform_grid(0.0, horizon, 16001);
  noise::NoiseModel unit_nu(1.0, base.model->distribution);
  liouville::NoiseSpec unit_spec = unit_nu;
  auto path =
      liouville::build_noise_eigenbasis_path(ops.h0, ops.h1, unit_spec, grid);
  auto h0_frame = qcore::track_eigenframe(ops.h0, grid);
  const Vector start = h0_frame.vectors.front().col(ops.target_label);
  const Vector target = h0_frame.vectors.back().col(ops.target_label);
  auto rho0 = qcore::DensityMatrix::pure(start);

  noise::NoiseModel off(0.0, base.model->distribution);
  auto noiseless = propagate::integrate_master(ops.h0, ops.h1, off, rho0,
                                               horizon, base.integration);
  if (noiseless.failed) throw NumericalError(noiseless.failure_reason);
  const double f0 = approx::fidelity(noiseless.final_state(), target);
  const double slope = approx::noise_sensitivity(
      ops.h0, ops.h1, unit_spec, rho0, target, horizon, base.integration);
  ResultTable weak{preset + "_weak", {"noise.nu", "fidelity"}, {}, ""};
  for (double nu : nu_values) {
    weak.rows.push_back({nu, approx::weak_noise_fidelity(f0, slope, nu)});
  }
  weak.metadata = "reproduce: " + preset + "\n" + render_config(base);
  tables.push_back(std::move(weak));

  ResultTable strong{preset + "_strong2", {"noise.nu", "fidelity"}, {}, ""};
  for (double nu : nu_values) {
    if (nu < 1.0) continue;
    liouville::NoiseSpec spec = noise::NoiseModel(nu, base.model->distribution);
    auto result = approx::strong_noise_second_order(
        liouville::replace_betas(path, spec), rho0, target);
    strong.rows.push_back({nu, result.fidelity_value});
  }
  strong.metadata = "reproduce: " + preset + "\n" + render_config(base);
  tables.push_back(std::move(strong));
  return tables;
}

// long-format (x, y, fidelity) heatmap over two swept parameters
ResultTable heatmap(const std::string& name, const ExperimentConfig& base,
                    const std::string& x_param,
                    const std::vector<double>& x_values,
                    const std::string& y_param,
                    const std::vector<double>& y_values) {
  ResultTable table{name, {x_param, y_param, "fidelity"}, {}, ""};
  table.rows.resize(x_values.size() * y_values.size());
  parallel_for(table.rows.size(), [&](std::size_t flat) {
    const std::size_t ix = flat / y_values.size();
    const std::size_t iy = flat % y_values.size();
    ExperimentConfig point = base;
    apply_override(point, x_param, x_values[ix]);
    apply_override(point, y_param, y_values[iy]);
    SingleRun run = run_single(point);
    table.rows[flat] = {x_values[ix], y_values[iy],
                        approx::fidelity(
                            run.record.final_state(),
                            run.frame.vectors.back().col(run.target_label))};
  });
  table.metadata = "reproduce: " + name + "\n" + render_config(base);
  return table;
}

std::vector<double> logspace(double start, double stop, std::size_t count) {
  std::vector<double> values(count);
  const double ratio = std::log(stop / start) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) values[i] = start * std::exp(ratio * i);
  values.back() = stop;
  return values;
}

std::vector<double> linspace(double start, double stop, std::size_t count) {
  std::vector<double> values(count);
  const double step = (stop - start) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) values[i] = start + step * i;
  values.back() = stop;
  return values;
}

}  // namespace

std::vector<std::string> known_figures() {
  return {"fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b",
          "fig4",  "fig5a", "fig5b", "fig6a", "fig6b", "fig6c"};
}

std::vector<ResultTable> reproduce_figure(const std::string& figure_id) {
  std::vector<ResultTable> tables;

  if (figure_id == "fig1a" || figure_id == "fig1b") {
    ExperimentConfig base = base_config("phase");
    base.scheme.omega = 0.4;
    base.scheme.total_time = 20.0;
    base.integration.monitor_interval = 0.05;
    if (figure_id == "fig1a") {
      // J in {0, 0.01, 0.1, 1} at D = 1e-4
      for (double j : {0.0, 0.01, 0.1, 1.0}) {
        ExperimentConfig config = base;
        config.coefficients = noise::TwoLevelCoefficients{j, 1e-4};
        auto result = run_experiment(config);
        tables.push_back(renamed(result.front(),
                                 "fig1a_J" + compact_number(j), figure_id));
      }
    } else {
      // D in {0, 0.01, 0.05, 0.1} at J = 0
      for (double d : {0.0, 0.01, 0.05, 0.1}) {
        ExperimentConfig config = base;
        config.coefficients = noise::TwoLevelCoefficients{0.0, d};
        auto result = run_experiment(config);
        tables.push_back(renamed(result.front(),
                                 "fig1b_D" + compact_number(d), figure_id));
      }
    }
    return tables;
  }

  if (figure_id == "fig2a") {
    const auto d_values = logspace(1e-3, 1e2, 26);
    for (double delta0 : {3.5, 1.0}) {
      ExperimentConfig base = base_config("rap");
      base.scheme.delta0 = delta0;
      base.scheme.total_time = 20.0;
      auto family = rap_fidelity_family(
          "fig2a_delta" + compact_number(delta0), base, d_values, true);
      tables.insert(tables.end(), family.begin(), family.end());
    }
    return tables;
  }

  if (figure_id == "fig2b") {
    ExperimentConfig base = base_config("rap");
    base.scheme.delta0 = 1.0;
    return {heatmap("fig2b", base, "noise.D", logspace(1e-3, 1e2, 21),
                    "scheme.T", linspace(2.0, 40.0, 20))};
  }

  if (figure_id == "fig3a" || figure_id == "fig3b") {
    const auto d_values = logspace(1e-3, 1e2, 26);
    for (double delta0 : {3.5, 1.0, 0.5}) {
      ExperimentConfig base = base_config("rap");
      base.scheme.delta0 = delta0;
      base.scheme.total_time = 20.0;
      if (figure_id == "fig3a") {
        base.scheme.h1_variant = "frequency_error";
      } else {
        base.scheme.h1_variant = "timing_frequency";
        base.scheme.c = 1.0;
      }
      auto family = rap_fidelity_family(
          figure_id + "_delta" + compact_number(delta0), base, d_values,
          false);
      // the caption shows exact and small-noise lines only
      family.resize(2);
      tables.insert(tables.end(), family.begin(), family.end());
    }
    return tables;
  }

  if (figure_id == "fig4") {
    const double total_time = 1.0, tau = 0.1;
    ResultTable table{"fig4", {"time", "omega12", "omega23"}, {}, ""};
    for (double t : linspace(0.0, total_time, 501)) {
      table.rows.push_back({t, schemes::stirap_pulse_12(t, total_time, tau),
                            schemes::stirap_pulse_23(t, total_time, tau)});
    }
    table.metadata = "reproduce: fig4\nstirap pulse sequence, T = 1, tau = 0.1\n";
    return {table};
  }

  if (figure_id == "fig5a" || figure_id == "fig5b") {
    const auto nu_values = logspace(1e-3, 10.0, 26);
    auto make_base = [&](double total_time, double sigma) {
      ExperimentConfig base = base_config("stirap");
      base.coefficients.reset();
      base.scheme.total_time = total_time;
      base.scheme.tau = 0.1;
      base.model = noise::NoiseModel(
          1.0, noise::StrikeDistribution::gaussian(0.0, sigma));
      return base;
    };
    if (figure_id == "fig5a") {
      for (double total_time : {100.0, 200.0, 300.0}) {
        auto family = stirap_fidelity_family(
            "fig5a_T" + compact_number(total_time),
            make_base(total_time, 2.0), nu_values);
        tables.insert(tables.end(), family.begin(), family.end());
      }
    } else {
      for (double sigma : {1.0, 2.0, 3.0}) {
        auto family = stirap_fidelity_family(
            "fig5b_sigma" + compact_number(sigma), make_base(200.0, sigma),
            nu_values);
        tables.insert(tables.end(), family.begin(), family.end());
      }
    }
    return tables;
  }

  if (figure_id == "fig6a" || figure_id == "fig6b" || figure_id == "fig6c") {
    ExperimentConfig base = base_config("stirap");
    base.coefficients.reset();
    base.scheme.total_time = 200.0;
    base.scheme.tau = 0.1;
    base.model =
        noise::NoiseModel(1.0, noise::StrikeDistribution::gaussian(0.0, 2.0));
    const auto nu_values = logspace(1e-3, 10.0, 21);
    if (figure_id == "fig6a") {
      return {heatmap("fig6a", base, "noise.nu", nu_values, "scheme.T",
                      linspace(50.0, 300.0, 11))};
    }
    if (figure_id == "fig6b") {
      return {heatmap("fig6b", base, "noise.nu", nu_values, "noise.sigma",
                      linspace(0.5, 3.0, 11))};
    }
    base.scheme.h1_variant = "phase_fluctuation";
    return {heatmap("fig6c", base, "noise.nu", nu_values, "scheme.T",
                    linspace(50.0, 300.0, 11))};
  }

  throw ConfigError("reproduce: unknown figure id '" + figure_id +
                    "' (known: fig1a..fig6c)");
}

}  // namespace poissonq::experiment
