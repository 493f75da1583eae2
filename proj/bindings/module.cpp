// Python bindings for the poissonq core: operators and schemes, noise models,
// superoperator builders, master-equation integrators, trajectory ensembles,
// the approximation ladder, and the config-driven experiment runner.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "poissonq/approx.hpp"
#include "poissonq/experiment.hpp"
#include "poissonq/schemes.hpp"
#include "poissonq/trajectories.hpp"

namespace py = pybind11;
using namespace poissonq;
using qcore::Matrix;
using qcore::TimeDependentOperator;
using qcore::Vector;

namespace {

// Accept either a NoiseModel or a (J, D) pair wherever a noise spec is needed.
liouville::NoiseSpec as_spec(const py::object& noise_like) {
  if (py::isinstance<noise::NoiseModel>(noise_like)) {
    return noise_like.cast<noise::NoiseModel>();
  }
  auto pair = noise_like.cast<std::pair<double, double>>();
  return noise::TwoLevelCoefficients{pair.first, pair.second};
}

qcore::DensityMatrix as_density(const Matrix& rho) {
  return qcore::DensityMatrix(rho);
}

propagate::IntegrationConfig make_config(double rel_tol, double abs_tol,
                                         double max_step, double initial_step,
                                         double monitor_interval) {
  propagate::IntegrationConfig cfg;
  cfg.rel_tol = rel_tol;
  cfg.abs_tol = abs_tol;
  cfg.max_step = max_step;
  cfg.initial_step = initial_step;
  cfg.monitor_interval = monitor_interval;
  return cfg;
}

py::list tables_to_python(const std::vector<experiment::ResultTable>& tables) {
  py::list out;
  for (const auto& table : tables) {
    py::dict entry;
    entry["name"] = table.name;
    entry["header"] = table.header;
    entry["rows"] = table.rows;
    entry["metadata"] = table.metadata;
    out.append(entry);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum dynamics under classical Poisson white noise";

  // --------------------------- qcore ---------------------------------------
  py::class_<TimeDependentOperator>(m, "TimeDependentOperator")
      .def(py::init([](Eigen::Index dim, std::function<Matrix(double)> fn,
                       bool time_independent) {
             TimeDependentOperator op;
             op.dim = dim;
             op.evaluate = std::move(fn);
             op.time_independent = time_independent;
             return op;
           }),
           py::arg("dim"), py::arg("evaluate"),
           py::arg("time_independent") = false)
      .def_readonly("dim", &TimeDependentOperator::dim)
      .def_readonly("time_independent",
                    &TimeDependentOperator::time_independent)
      .def("at", [](const TimeDependentOperator& op, double t) {
        return op.evaluate(t);
      });

  m.def("constant_operator", [](const Matrix& h) {
    return qcore::constant_operator(qcore::HermitianOperator(h));
  });

  m.def("vectorize",
        [](const Matrix& rho) { return qcore::vectorize_operator(rho).coords; });
  m.def("devectorize", [](const Vector& coords) {
    const auto d = static_cast<Eigen::Index>(std::lround(
        std::sqrt(static_cast<double>(coords.size()))));
    return qcore::devectorize({d, coords});
  });
  m.def("hs_inner", [](const Matrix& a, const Matrix& b) {
    return qcore::hs_inner(a, b);
  });
  m.def("eigendecompose", [](const Matrix& h) {
    auto es = qcore::eigendecompose(qcore::HermitianOperator(h));
    return py::make_tuple(es.values, es.vectors);
  });

  py::class_<qcore::EigenFrame>(m, "EigenFrame")
      .def_readonly("times", &qcore::EigenFrame::times)
      .def_readonly("values", &qcore::EigenFrame::values)
      .def_readonly("vectors", &qcore::EigenFrame::vectors);
  m.def("track_eigenframe", &qcore::track_eigenframe,
        py::call_guard<py::gil_scoped_release>());

  m.def("unitary_kick", [](const Matrix& h1, double xi) {
    return qcore::unitary_kick(qcore::HermitianOperator(h1), xi);
  });
  m.def("nested_commutator", &qcore::nested_commutator);
  m.def("uniform_grid", &qcore::uniform_grid);

  // --------------------------- noise ---------------------------------------
  py::class_<noise::StrikeDistribution>(m, "StrikeDistribution")
      .def_static("laplace", &noise::StrikeDistribution::laplace)
      .def_static("gaussian", &noise::StrikeDistribution::gaussian)
      .def_static("point_mass", &noise::StrikeDistribution::point_mass)
      .def("characteristic_function",
           &noise::StrikeDistribution::characteristic_function)
      .def("moment", &noise::StrikeDistribution::moment)
      .def("symmetric", &noise::StrikeDistribution::symmetric)
      .def("__repr__", &noise::StrikeDistribution::describe);

  py::class_<noise::NoiseModel>(m, "NoiseModel")
      .def(py::init<double, noise::StrikeDistribution>(), py::arg("nu"),
           py::arg("distribution"))
      .def_readonly("nu", &noise::NoiseModel::nu)
      .def_readonly("distribution", &noise::NoiseModel::distribution);

  m.def("beta_eigenvalue", &noise::beta_eigenvalue);
  m.def("two_level_JD", [](const noise::NoiseModel& model, double chi) {
    auto coeffs = noise::two_level_JD(model, chi);
    return py::make_tuple(coeffs.J, coeffs.D);
  });
  m.def("gaussian_limit_map", [](const noise::NoiseModel& model) {
    auto lim = noise::gaussian_limit_map(model);
    return py::make_tuple(lim.J_tilde, lim.D_tilde);
  });
  m.def(
      "sample_strikes",
      [](const noise::NoiseModel& model, double horizon, std::uint64_t seed,
         std::uint64_t index) {
        noise::RngStream stream(seed, index);
        std::vector<std::pair<double, double>> out;
        for (const auto& strike :
             noise::sample_strikes(model, horizon, stream)) {
          out.emplace_back(strike.time, strike.strength);
        }
        return out;
      },
      py::arg("model"), py::arg("horizon"), py::arg("seed"),
      py::arg("index") = 0);

  // --------------------------- liouvillian ----------------------------------
  m.def("build_L0", [](const Matrix& h0) {
    return liouville::build_L0(qcore::HermitianOperator(h0)).matrix;
  });
  m.def("build_L1_spectral",
        [](const Matrix& h1, const noise::NoiseModel& model) {
          auto [build, basis] =
              liouville::build_L1_spectral(qcore::HermitianOperator(h1), model);
          return py::make_tuple(build.matrix, basis.betas,
                                basis.frame.values, basis.frame.vectors);
        });
  m.def("build_L1_series",
        [](const Matrix& h1, const noise::NoiseModel& model, int max_terms) {
          return liouville::build_L1_series(qcore::HermitianOperator(h1), model,
                                            max_terms)
              .matrix;
        },
        py::arg("h1"), py::arg("model"), py::arg("max_terms") = 60);
  m.def("build_L1_quadrature",
        [](const Matrix& h1, const noise::NoiseModel& model, double abs_tol) {
          return liouville::build_L1_quadrature(qcore::HermitianOperator(h1),
                                                model, abs_tol)
              .matrix;
        },
        py::arg("h1"), py::arg("model"), py::arg("abs_tol") = 1e-10);
  m.def("build_gaussian_generator",
        [](const Matrix& h0, const Matrix& h1, double j_tilde, double d_tilde) {
          return liouville::build_gaussian_generator(
                     qcore::HermitianOperator(h0), qcore::HermitianOperator(h1),
                     j_tilde, d_tilde)
              .matrix;
        });
  m.def("build_two_level_generator",
        [](const Matrix& h0, const Matrix& h1, double j, double d) {
          return liouville::build_two_level_generator(
                     qcore::HermitianOperator(h0), qcore::HermitianOperator(h1),
                     noise::TwoLevelCoefficients{j, d})
              .matrix;
        });
  m.def("two_level_chi", &liouville::two_level_chi);

  py::class_<liouville::NoiseEigenbasisPath>(m, "NoiseEigenbasisPath")
      .def_readonly("times", &liouville::NoiseEigenbasisPath::times)
      .def_readonly("vectors", &liouville::NoiseEigenbasisPath::vectors)
      .def_readonly("values", &liouville::NoiseEigenbasisPath::values)
      .def_readonly("betas", &liouville::NoiseEigenbasisPath::betas);
  m.def(
      "build_noise_eigenbasis_path",
      [](const TimeDependentOperator& h0, const TimeDependentOperator& h1,
         const py::object& noise_like, const std::vector<double>& grid) {
        return liouville::build_noise_eigenbasis_path(h0, h1,
                                                      as_spec(noise_like), grid);
      },
      py::arg("h0"), py::arg("h1"), py::arg("noise"), py::arg("grid"));

  // --------------------------- propagate ------------------------------------
  py::class_<propagate::IntegrationConfig>(m, "IntegrationConfig")
      .def(py::init(&make_config), py::arg("rel_tol") = 1e-9,
           py::arg("abs_tol") = 1e-11, py::arg("max_step") = 0.0,
           py::arg("initial_step") = 0.0, py::arg("monitor_interval") = 0.0)
      .def_readwrite("rel_tol", &propagate::IntegrationConfig::rel_tol)
      .def_readwrite("abs_tol", &propagate::IntegrationConfig::abs_tol)
      .def_readwrite("max_step", &propagate::IntegrationConfig::max_step)
      .def_readwrite("initial_step",
                     &propagate::IntegrationConfig::initial_step)
      .def_readwrite("monitor_interval",
                     &propagate::IntegrationConfig::monitor_interval);

  py::class_<propagate::PropagationRecord>(m, "PropagationRecord")
      .def_readonly("times", &propagate::PropagationRecord::times)
      .def_readonly("states", &propagate::PropagationRecord::states)
      .def_readonly("failed", &propagate::PropagationRecord::failed)
      .def_readonly("failure_reason",
                    &propagate::PropagationRecord::failure_reason)
      .def("worst_trace_error",
           &propagate::PropagationRecord::worst_trace_error)
      .def("worst_hermiticity_error",
           &propagate::PropagationRecord::worst_hermiticity_error)
      .def("worst_min_eigenvalue",
           &propagate::PropagationRecord::worst_min_eigenvalue);

  m.def(
      "integrate_master",
      [](const TimeDependentOperator& h0, const TimeDependentOperator& h1,
         const noise::NoiseModel& model, const Matrix& rho0, double horizon,
         const propagate::IntegrationConfig& cfg) {
        return propagate::integrate_master(h0, h1, model, as_density(rho0),
                                           horizon, cfg);
      },
      py::arg("h0"), py::arg("h1"), py::arg("model"), py::arg("rho0"),
      py::arg("horizon"), py::arg("config") = propagate::IntegrationConfig{});
  m.def(
      "integrate_two_level",
      [](const TimeDependentOperator& h0, const TimeDependentOperator& h1,
         double j, double d, const Matrix& rho0, double horizon,
         const propagate::IntegrationConfig& cfg) {
        return propagate::integrate_two_level(
            h0, h1, noise::TwoLevelCoefficients{j, d}, as_density(rho0),
            horizon, cfg);
      },
      py::arg("h0"), py::arg("h1"), py::arg("J"), py::arg("D"),
      py::arg("rho0"), py::arg("horizon"),
      py::arg("config") = propagate::IntegrationConfig{});
  m.def(
      "integrate_unitary",
      [](const TimeDependentOperator& h0, const Vector& psi0, double t_from,
         double t_to, const propagate::IntegrationConfig& cfg) {
        auto result = propagate::integrate_unitary(h0, psi0, t_from, t_to, cfg);
        return py::make_tuple(result.map, result.state);
      },
      py::arg("h0"), py::arg("psi0"), py::arg("t_from"), py::arg("t_to"),
      py::arg("config") = propagate::IntegrationConfig{});
  m.def("integrate_coefficients",
        [](const liouville::NoiseEigenbasisPath& path, const Matrix& d0) {
          auto record = propagate::integrate_coefficients(path, d0);
          return py::make_tuple(record.times, record.coefficients);
        });

  // --------------------------- schemes --------------------------------------
  m.def("phase_changing_h0", &schemes::phase_changing_h0, py::arg("omega"),
        py::arg("omega0") = 1.0);
  m.def("rap_h0", &schemes::rap_h0, py::arg("delta0"), py::arg("total_time"),
        py::arg("omega0") = 1.0);
  m.def(
      "rap_noise_h1",
      [](const std::string& variant, double delta0, double total_time, double c,
         double omega0) {
        schemes::RapNoise kind;
        if (variant == "same_as_h0") {
          kind = schemes::RapNoise::same_as_h0;
        } else if (variant == "frequency_error") {
          kind = schemes::RapNoise::frequency_error;
        } else if (variant == "timing_frequency") {
          kind = schemes::RapNoise::timing_frequency;
        } else {
          throw std::invalid_argument("rap_noise_h1: unknown variant '" +
                                      variant + "'");
        }
        return schemes::rap_noise_h1(kind, delta0, total_time, c, omega0);
      },
      py::arg("variant"), py::arg("delta0"), py::arg("total_time"),
      py::arg("c") = 0.0, py::arg("omega0") = 1.0);
  m.def("stirap_h0", &schemes::stirap_h0, py::arg("total_time"),
        py::arg("tau"), py::arg("omega0") = 1.0);
  m.def(
      "stirap_noise_h1",
      [](const std::string& variant, double total_time, double tau,
         double omega0) {
        if (variant == "same_as_h0") {
          return schemes::stirap_noise_h1(schemes::StirapNoise::same_as_h0,
                                          total_time, tau, omega0);
        }
        if (variant == "phase_fluctuation") {
          return schemes::stirap_noise_h1(
              schemes::StirapNoise::phase_fluctuation, total_time, tau, omega0);
        }
        throw std::invalid_argument("stirap_noise_h1: unknown variant '" +
                                    variant + "'");
      },
      py::arg("variant"), py::arg("total_time"), py::arg("tau"),
      py::arg("omega0") = 1.0);
  m.def("stirap_pulse_12", &schemes::stirap_pulse_12, py::arg("t"),
        py::arg("total_time"), py::arg("tau"), py::arg("omega0") = 1.0);
  m.def("stirap_pulse_23", &schemes::stirap_pulse_23, py::arg("t"),
        py::arg("total_time"), py::arg("tau"), py::arg("omega0") = 1.0);

  // --------------------------- trajectories ---------------------------------
  py::class_<traj::TrajectoryEnsemble>(m, "TrajectoryEnsemble")
      .def_readonly("times", &traj::TrajectoryEnsemble::times)
      .def_readonly("mean_state", &traj::TrajectoryEnsemble::mean_state)
      .def_readonly("std_error", &traj::TrajectoryEnsemble::std_error);
  m.def(
      "run_trajectory",
      [](const TimeDependentOperator& h0, const TimeDependentOperator& h1,
         const std::vector<std::pair<double, double>>& strikes,
         const Vector& psi0, double horizon,
         const propagate::IntegrationConfig& cfg) {
        std::vector<noise::Strike> converted;
        converted.reserve(strikes.size());
        for (const auto& [t, xi] : strikes) converted.push_back({t, xi});
        auto record = traj::run_trajectory(h0, h1, converted, psi0, horizon, cfg);
        return py::make_tuple(record.times, record.states);
      },
      py::arg("h0"), py::arg("h1"), py::arg("strikes"), py::arg("psi0"),
      py::arg("horizon"), py::arg("config") = propagate::IntegrationConfig{});
  m.def(
      "average_ensemble",
      [](const TimeDependentOperator& h0, const TimeDependentOperator& h1,
         const noise::NoiseModel& model, const Matrix& rho0, double horizon,
         std::size_t n_traj, std::uint64_t seed,
         const propagate::IntegrationConfig& cfg) {
        return traj::average_ensemble(h0, h1, model, as_density(rho0), horizon,
                                      n_traj, seed, cfg);
      },
      py::arg("h0"), py::arg("h1"), py::arg("model"), py::arg("rho0"),
      py::arg("horizon"), py::arg("n_traj"), py::arg("seed"),
      py::arg("config") = propagate::IntegrationConfig{});
  m.def("compare_to_master",
        [](const traj::TrajectoryEnsemble& ensemble,
           const propagate::PropagationRecord& record) {
          auto report = traj::compare_to_master(ensemble, record);
          return py::make_tuple(report.pass, report.max_deviation,
                                report.fraction_within, report.deviation);
        });

  // --------------------------- approx ---------------------------------------
  m.def("fidelity", [](const Matrix& rho, const Vector& target) {
    return approx::fidelity(rho, target);
  });
  m.def("adiabatic_state",
        [](const TimeDependentOperator& h0, const Vector& amplitudes,
           const std::vector<double>& grid) {
          auto path = approx::adiabatic_state(h0, amplitudes, grid);
          return py::make_tuple(path.times, path.states);
        });
  m.def(
      "noise_sensitivity",
      [](const TimeDependentOperator& h0, const TimeDependentOperator& h1,
         const py::object& noise_like, const Matrix& rho0,
         const Vector& target, double horizon,
         const propagate::IntegrationConfig& cfg, std::size_t n_points) {
        return approx::noise_sensitivity(h0, h1, as_spec(noise_like),
                                         as_density(rho0), target, horizon,
                                         cfg, n_points);
      },
      py::arg("h0"), py::arg("h1"), py::arg("noise"), py::arg("rho0"),
      py::arg("target"), py::arg("horizon"),
      py::arg("config") = propagate::IntegrationConfig{},
      py::arg("n_points") = 0);
  m.def("weak_noise_fidelity", &approx::weak_noise_fidelity);
  m.def("strong_noise_limit",
        [](const liouville::NoiseEigenbasisPath& path, const Matrix& rho0,
           const Vector& target) {
          auto limit = approx::strong_noise_limit(path, as_density(rho0), target);
          py::dict out;
          out["fidelity_infinity"] = limit.fidelity_infinity;
          out["purity"] = limit.purity;
          out["initial_populations"] = limit.initial_populations;
          out["rho_infinity_final"] = limit.rho_infinity_final;
          out["degenerate_start"] = limit.degenerate_start;
          return out;
        });
  m.def(
      "naive_strong_noise",
      [](const TimeDependentOperator& h1, const py::object& noise_like,
         const Matrix& rho0, double horizon,
         const propagate::IntegrationConfig& cfg) {
        return approx::naive_strong_noise(h1, as_spec(noise_like),
                                          as_density(rho0), horizon, cfg);
      },
      py::arg("h1"), py::arg("noise"), py::arg("rho0"), py::arg("horizon"),
      py::arg("config") = propagate::IntegrationConfig{});
  m.def("strong_noise_second_order",
        [](const liouville::NoiseEigenbasisPath& path, const Matrix& rho0,
           const Vector& target) {
          auto result =
              approx::strong_noise_second_order(path, as_density(rho0), target);
          return py::make_tuple(result.fidelity_value, result.rho_final,
                                result.d_final);
        });

  // --------------------------- experiment -----------------------------------
  m.def("run_experiment_text", [](const std::string& text) {
    return tables_to_python(
        experiment::run_experiment(experiment::parse_config_text(text)));
  });
  m.def("run_experiment_file", [](const std::string& path) {
    return tables_to_python(
        experiment::run_experiment(experiment::parse_config_file(path)));
  });
  m.def("reproduce_figure", [](const std::string& figure_id) {
    return tables_to_python(experiment::reproduce_figure(figure_id));
  });
  m.def("known_figures", &experiment::known_figures);
  m.def(
      "validate_experiment",
      [](const std::string& text, std::size_t n_traj, std::uint64_t seed) {
        auto outcome = experiment::validate_experiment(
            experiment::parse_config_text(text), n_traj, seed);
        py::dict out;
        out["pass"] = outcome.report.pass;
        out["max_deviation"] = outcome.report.max_deviation;
        out["fraction_within"] = outcome.report.fraction_within;
        out["deviation"] = outcome.report.deviation;
        return out;
      },
      py::arg("config_text"), py::arg("n_traj"), py::arg("seed"));

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
