#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "poissonq/experiment.hpp"

#include <cmath>

using namespace poissonq;
using experiment::ConfigError;
using experiment::ExperimentConfig;

namespace {

const char* kRapConfig = R"(
[scheme]
id = rap
delta0 = 1
T = 20
h1 = same_as_h0

[noise]
J = 0
D = 0.1

[outputs]
observables = fidelity, purity

[run]
seed = 7
)";

}  // namespace

TEST_CASE("config parsing: defaults, errors, field paths") {
  auto config = experiment::parse_config_text(kRapConfig);
  CHECK(config.scheme.id == "rap");
  CHECK(config.scheme.total_time == 20.0);
  CHECK(config.coefficients.has_value());
  CHECK(config.coefficients->D == 0.1);
  CHECK(config.integration.rel_tol == 1e-9);
  CHECK(config.seed == 7);
  CHECK(config.outputs.fidelity);
  CHECK(config.outputs.purity);
  CHECK_FALSE(config.outputs.populations);

  CHECK_THROWS_WITH_AS(
      (void)experiment::parse_config_text("[scheme]\nid = rap\n"),
      doctest::Contains("noise"), ConfigError);

  CHECK_THROWS_WITH_AS((void)experiment::parse_config_text(
                           "[scheme]\nid = rap\n[noise]\nD = 0.1\nnu = 1\n"),
                       doctest::Contains("noise"), ConfigError);

  CHECK_THROWS_WITH_AS(
      (void)experiment::parse_config_text(
          "[scheme]\nid = rap\nbogus = 3\n[noise]\nD = 0.1\n"),
      doctest::Contains("scheme.bogus"), ConfigError);

  CHECK_THROWS_WITH_AS(
      (void)experiment::parse_config_text(
          "[scheme]\nid = stirap\nT = 100\n[noise]\nJ = 0\nD = 0.1\n"),
      doctest::Contains("(J, D)"), ConfigError);

  CHECK_THROWS_WITH_AS(
      (void)experiment::parse_config_text(
          "[scheme]\nid = rap\n[noise]\nnu = 1\ndistribution = cauchy\n"),
      doctest::Contains("distribution"), ConfigError);
}

TEST_CASE("sweep value grammar") {
  auto config = experiment::parse_config_text(
      "[scheme]\nid = rap\n[noise]\nJ = 0\nD = 0.1\n"
      "[sweep]\nparameter = noise.D\nvalues = logspace(1e-3, 1e1, 5)\n");
  REQUIRE(config.sweep.has_value());
  REQUIRE(config.sweep->values.size() == 5);
  CHECK(config.sweep->values.front() == doctest::Approx(1e-3));
  CHECK(config.sweep->values.back() == 10.0);
  CHECK(config.sweep->values[1] / config.sweep->values[0] ==
        doctest::Approx(10.0));

  auto listed = experiment::parse_config_text(
      "[scheme]\nid = rap\n[noise]\nJ = 0\nD = 0.1\n"
      "[sweep]\nparameter = scheme.T\nvalues = 5, 10, 20\n");
  CHECK(listed.sweep->values == std::vector<double>{5.0, 10.0, 20.0});

  CHECK_THROWS_WITH_AS(
      (void)experiment::parse_config_text(
          "[scheme]\nid = rap\n[noise]\nJ = 0\nD = 0.1\n"
          "[sweep]\nparameter = noise.frequency\nvalues = 1, 2\n"),
      doctest::Contains("sweep.parameter"), ConfigError);
}

TEST_CASE("noiseless run matches unitary fidelity") {
  auto config = experiment::parse_config_text(
      "[scheme]\nid = phase\nomega = 0.4\nT = 20\n[noise]\nJ = 0\nD = 0\n");
  auto tables = experiment::run_experiment(config);
  REQUIRE(tables.size() == 1);
  const auto& fid = tables.front();

  auto ops = schemes::make_operators(config.scheme);
  auto grid = qcore::uniform_grid(0.0, 20.0, 801);
  auto frame = qcore::track_eigenframe(ops.h0, grid);
  propagate::IntegrationConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  auto unit = propagate::integrate_unitary(
      ops.h0, frame.vectors.front().col(1), 0.0, 20.0, tight);
  const double f_unitary = approx::fidelity(
      (unit.state * unit.state.adjoint()).eval(),
      frame.vectors.back().col(1));
  CHECK(std::abs(fid.rows.back().back() - f_unitary) < 1e-6);
}

TEST_CASE("phase scheme with noise loses fidelity overall") {
  auto config = experiment::parse_config_text(
      "[scheme]\nid = phase\nomega = 0.4\nT = 20\n[noise]\nJ = 0\nD = 0.1\n");
  auto tables = experiment::run_experiment(config);
  const auto& rows = tables.front().rows;
  CHECK(rows.back()[1] < rows.front()[1] - 0.05);
}

TEST_CASE("sweeps emit one row per grid point") {
  auto config = experiment::parse_config_text(
      "[scheme]\nid = rap\ndelta0 = 1\nT = 10\n[noise]\nJ = 0\nD = 0.1\n"
      "[outputs]\nobservables = fidelity, populations\n"
      "[sweep]\nparameter = noise.D\nvalues = logspace(1e-3, 1e0, 7)\n");
  auto tables = experiment::run_experiment(config);
  REQUIRE(tables.size() == 2);
  CHECK(tables[0].rows.size() == 7);
  CHECK(tables[1].rows.size() == 7);
  CHECK(tables[0].header.front() == "noise.D");
  CHECK(tables[1].header ==
        std::vector<std::string>{"noise.D", "p0", "p1"});
}

TEST_CASE("CSV metadata round trip reproduces identical rows") {
  auto config = experiment::parse_config_text(
      "[scheme]\nid = rap\ndelta0 = 1.3\nT = 8\n[noise]\nnu = 0.7\n"
      "distribution = laplace\nscale = 0.31\n"
      "[integration]\nmonitor_interval = 0.4\n"
      "[outputs]\nobservables = fidelity, coherences\n[run]\nseed = 13\n");
  auto tables = experiment::run_experiment(config);

  const std::string csv = experiment::csv_text(tables.front());
  auto reparsed = experiment::parse_config_text(
      experiment::strip_metadata(csv));
  auto tables2 = experiment::run_experiment(reparsed);

  REQUIRE(tables2.size() == tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    REQUIRE(tables2[t].rows.size() == tables[t].rows.size());
    for (std::size_t r = 0; r < tables[t].rows.size(); ++r) {
      for (std::size_t c = 0; c < tables[t].rows[r].size(); ++c) {
        CHECK(tables2[t].rows[r][c] == tables[t].rows[r][c]);
      }
    }
  }
}

TEST_CASE("validation: zero noise passes trivially, model required") {
  auto config = experiment::parse_config_text(
      "[scheme]\nid = rap\ndelta0 = 1\nT = 6\n[noise]\nnu = 0\n"
      "distribution = point_mass\nvalue = 0.4\n"
      "[integration]\nmonitor_interval = 0.5\n");
  auto outcome = experiment::validate_experiment(config, 16, 5);
  CHECK(outcome.report.pass);
  CHECK(outcome.table.rows.size() == 13);
  CHECK(outcome.table.metadata.find("PASS") != std::string::npos);

  auto jd_config = experiment::parse_config_text(kRapConfig);
  CHECK_THROWS_WITH_AS(
      (void)experiment::validate_experiment(jd_config, 16, 5),
      doctest::Contains("validate"), ConfigError);
}

TEST_CASE("validation: RAP point-mass ensemble passes at 3 sigma") {
  auto config = experiment::parse_config_text(
      "[scheme]\nid = rap\ndelta0 = 1\nT = 6\n[noise]\nnu = 0.8\n"
      "distribution = point_mass\nvalue = 0.5\n"
      "[integration]\nmonitor_interval = 0.25\n[run]\nseed = 99\n");
  auto outcome = experiment::validate_experiment(config, 500, 99);
  CHECK(outcome.report.pass);
}

TEST_CASE("reproduce: figure ids and table shapes") {
  CHECK_THROWS_AS((void)experiment::reproduce_figure("fig9"), ConfigError);
  CHECK(experiment::known_figures().size() == 12);

  auto fig4 = experiment::reproduce_figure("fig4");
  REQUIRE(fig4.size() == 1);
  CHECK(fig4.front().header ==
        std::vector<std::string>{"time", "omega12", "omega23"});
  CHECK(fig4.front().rows.size() == 501);
  // pulse peaks at T(1/2 -+ tau)
  double best12 = 0.0, t12 = 0.0, best23 = 0.0, t23 = 0.0;
  for (const auto& row : fig4.front().rows) {
    if (row[1] > best12) {
      best12 = row[1];
      t12 = row[0];
    }
    if (row[2] > best23) {
      best23 = row[2];
      t23 = row[0];
    }
  }
  CHECK(t12 == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(t23 == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("reproduce fig1a: fidelity increases with the noise bias J") {
  auto tables = experiment::reproduce_figure("fig1a");
  REQUIRE(tables.size() == 4);  // J in {0, 0.01, 0.1, 1}
  // compare the worst-case fidelity over time across the J curves
  std::vector<double> worst;
  for (const auto& table : tables) {
    double lowest = 1.0;
    for (const auto& row : table.rows) lowest = std::min(lowest, row[1]);
    worst.push_back(lowest);
  }
  CHECK(worst[0] < worst[1]);
  CHECK(worst[1] < worst[2]);
  CHECK(worst[2] < worst[3]);
}
