#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "poissonq/schemes.hpp"
#include "poissonq/trajectories.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace poissonq;
using noise::NoiseModel;
using noise::StrikeDistribution;
using propagate::IntegrationConfig;
using qcore::Complex;
using qcore::DensityMatrix;
using qcore::Matrix;
using qcore::TimeDependentOperator;
using qcore::Vector;

namespace {

TimeDependentOperator zero_op(Eigen::Index d) {
  TimeDependentOperator op;
  op.dim = d;
  op.time_independent = true;
  op.evaluate = [d](double) -> Matrix { return Matrix::Zero(d, d); };
  return op;
}

TimeDependentOperator static_op(const Matrix& m) {
  TimeDependentOperator op;
  op.dim = m.rows();
  op.time_independent = true;
  op.evaluate = [m](double) { return m; };
  return op;
}

}  // namespace

TEST_CASE("trajectory without strikes is plain unitary evolution") {
  auto h0 = schemes::rap_h0(1.0, 6.0);
  std::mt19937_64 rng(3);
  Vector psi0 = testutil::random_state(rng, 2);
  IntegrationConfig cfg;
  auto record = traj::run_trajectory(h0, h0, {}, psi0, 6.0, cfg);

  IntegrationConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  auto unit = propagate::integrate_unitary(h0, psi0, 0.0, 6.0, tight);
  CHECK((record.states.back() - unit.state * unit.state.adjoint())
            .cwiseAbs()
            .maxCoeff() < 1e-8);
}

TEST_CASE("single strike with H0 = 0 applies one kick") {
  auto h0 = zero_op(2);
  Matrix h1m(2, 2);
  h1m << 0.3, Complex(0.2, -0.4), Complex(0.2, 0.4), -0.3;
  auto h1 = static_op(h1m);

  Vector psi0(2);
  psi0 << 1.0, 0.0;
  std::vector<noise::Strike> strikes = {{1.3, 0.8}};
  auto record = traj::run_trajectory(h0, h1, strikes, psi0, 4.0, IntegrationConfig{});

  Matrix kick = qcore::unitary_kick(qcore::HermitianOperator(h1m), 0.8);
  Matrix expected = kick * psi0 * psi0.adjoint() * kick.adjoint();
  CHECK((record.states.back() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two strikes with a static H0 match the composed product") {
  Matrix h0m(2, 2);
  h0m << 0.25, Complex(0.4, 0.1), Complex(0.4, -0.1), -0.25;
  Matrix h1m(2, 2);
  h1m << -0.5, 0.2, 0.2, 0.5;
  auto h0 = static_op(h0m);
  auto h1 = static_op(h1m);

  Vector psi0(2);
  psi0 << std::sqrt(0.7), std::sqrt(0.3);
  const double horizon = 5.0;
  std::vector<noise::Strike> strikes = {{1.1, 0.6}, {3.4, -1.2}};

  IntegrationConfig cfg;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  auto record = traj::run_trajectory(h0, h1, strikes, psi0, horizon, cfg);

  auto u = [&](double dt) {
    return qcore::unitary_kick(qcore::HermitianOperator(h0m), dt);
  };
  Matrix a1 = qcore::unitary_kick(qcore::HermitianOperator(h1m), 0.6);
  Matrix a2 = qcore::unitary_kick(qcore::HermitianOperator(h1m), -1.2);
  Vector psi = u(horizon - 3.4) * a2 * u(3.4 - 1.1) * a1 * u(1.1) * psi0;
  CHECK((record.states.back() - psi * psi.adjoint()).cwiseAbs().maxCoeff() <
        1e-9);

  // purity stays 1 along the whole trajectory
  for (const auto& state : record.states) {
    CHECK(std::abs((state * state).trace().real() - 1.0) < 1e-9);
  }

  std::vector<noise::Strike> unsorted = {{3.4, 0.1}, {1.1, 0.2}};
  CHECK_THROWS_AS(
      (void)traj::run_trajectory(h0, h1, unsorted, psi0, horizon, cfg),
      std::invalid_argument);
}

TEST_CASE("noiseless ensemble has zero variance") {
  auto h0 = schemes::rap_h0(1.0, 4.0);
  NoiseModel off(0.0, StrikeDistribution::point_mass(0.5));
  Vector psi0(2);
  psi0 << 1.0, 0.0;
  auto ensemble = traj::average_ensemble(h0, h0, off, DensityMatrix::pure(psi0),
                                         4.0, 8, 99, IntegrationConfig{});
  for (double sem : ensemble.std_error) CHECK(sem < 1e-13);

  auto master = propagate::integrate_master(h0, h0, off,
                                            DensityMatrix::pure(psi0), 4.0,
                                            IntegrationConfig{});
  auto report = traj::compare_to_master(ensemble, master);
  CHECK(report.pass);
  CHECK(report.max_deviation < 1.0);
}

TEST_CASE("ensembles are reproducible and block-order independent") {
  auto h0 = schemes::rap_h0(1.0, 3.0);
  NoiseModel model(1.0, StrikeDistribution::point_mass(0.4));
  Vector psi0(2);
  psi0 << 1.0, 0.0;
  IntegrationConfig cfg;
  cfg.monitor_interval = 0.25;

  auto a = traj::average_ensemble(h0, h0, model, DensityMatrix::pure(psi0), 3.0,
                                  70, 1234, cfg);
  auto b = traj::average_ensemble(h0, h0, model, DensityMatrix::pure(psi0), 3.0,
                                  70, 1234, cfg);
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    CHECK((a.mean_state[k] - b.mean_state[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.std_error[k] == b.std_error[k]);
  }

  auto c = traj::average_ensemble(h0, h0, model, DensityMatrix::pure(psi0), 3.0,
                                  70, 4321, cfg);
  CHECK((a.mean_state.back() - c.mean_state.back()).cwiseAbs().maxCoeff() >
        0.0);
}

TEST_CASE("RAP ensemble agrees with the master equation at 3 sigma") {
  const double horizon = 6.0;
  auto h0 = schemes::rap_h0(1.0, horizon);
  NoiseModel model(0.8, StrikeDistribution::point_mass(0.5));
  Vector psi0(2);
  psi0 << 1.0, 0.0;
  IntegrationConfig cfg;
  cfg.monitor_interval = 0.12;

  auto ensemble = traj::average_ensemble(h0, h0, model,
                                         DensityMatrix::pure(psi0), horizon,
                                         600, 2024, cfg);
  auto master = propagate::integrate_master(h0, h0, model,
                                            DensityMatrix::pure(psi0), horizon,
                                            cfg);
  REQUIRE_FALSE(master.failed);
  auto report = traj::compare_to_master(ensemble, master);
  CHECK(report.pass);

  // negative control: a corrupted noise strength must fail the comparison
  NoiseModel wrong(0.8, StrikeDistribution::point_mass(0.75));
  auto corrupted = propagate::integrate_master(
      h0, h0, wrong, DensityMatrix::pure(psi0), horizon, cfg);
  auto bad_report = traj::compare_to_master(ensemble, corrupted);
  CHECK_FALSE(bad_report.pass);

  IntegrationConfig other = cfg;
  other.monitor_interval = 0.5;
  auto mismatched = propagate::integrate_master(
      h0, h0, model, DensityMatrix::pure(psi0), horizon, other);
  CHECK_THROWS_AS((void)traj::compare_to_master(ensemble, mismatched),
                  std::invalid_argument);
}

TEST_CASE("mixed starts evolve through the density path") {
  Matrix h0m(2, 2);
  h0m << 0.3, 0.1, 0.1, -0.3;
  auto h0 = static_op(h0m);
  Matrix h1m(2, 2);
  h1m << -0.2, 0.35, 0.35, 0.2;
  auto h1 = static_op(h1m);

  Matrix mixed = Matrix::Zero(2, 2);
  mixed(0, 0) = 0.7;
  mixed(1, 1) = 0.3;
  std::vector<noise::Strike> strikes = {{0.9, 0.7}};
  auto record = traj::run_trajectory(h0, h1, strikes, DensityMatrix(mixed), 2.0,
                                     IntegrationConfig{});

  Matrix u1 = qcore::unitary_kick(qcore::HermitianOperator(h0m), 0.9);
  Matrix kick = qcore::unitary_kick(qcore::HermitianOperator(h1m), 0.7);
  Matrix u2 = qcore::unitary_kick(qcore::HermitianOperator(h0m), 1.1);
  Matrix expected = u2 * kick * u1 * mixed * u1.adjoint() * kick.adjoint() *
                    u2.adjoint();
  CHECK((record.states.back() - expected).cwiseAbs().maxCoeff() < 1e-9);
}
