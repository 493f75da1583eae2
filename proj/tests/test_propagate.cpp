#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "poissonq/propagate.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

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

TimeDependentOperator rap_like_h0(double delta0, double total_time) {
  TimeDependentOperator op;
  op.dim = 2;
  op.evaluate = [=](double t) {
    const double omega_r = std::sin(std::numbers::pi * t / total_time);
    const double delta =
        -delta0 * std::cos(std::numbers::pi * t / total_time);
    Matrix h(2, 2);
    h << -delta / 2.0, omega_r / 2.0, omega_r / 2.0, delta / 2.0;
    return h;
  };
  return op;
}

TimeDependentOperator scaled(const TimeDependentOperator& op, double factor) {
  TimeDependentOperator out;
  out.dim = op.dim;
  out.time_independent = op.time_independent;
  out.evaluate = [op, factor](double t) {
    return (factor * op.evaluate(t)).eval();
  };
  return out;
}

}  // namespace

TEST_CASE("noiseless master equation matches unitary evolution") {
  auto h0 = rap_like_h0(1.0, 10.0);
  auto h1 = rap_like_h0(1.0, 10.0);
  NoiseModel off(0.0, StrikeDistribution::gaussian(0.0, 1.0));
  std::mt19937_64 rng(3);
  Vector psi0 = testutil::random_state(rng, 2);

  IntegrationConfig cfg;
  auto record = propagate::integrate_master(h0, h1, off, DensityMatrix::pure(psi0),
                                            10.0, cfg);
  REQUIRE_FALSE(record.failed);

  auto unit = propagate::integrate_unitary(h0, psi0, 0.0, 10.0, cfg);
  Matrix expected = (unit.state * unit.state.adjoint()).eval();
  CHECK((record.final_state() - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("static commuting case has the exact exponential solution") {
  Eigen::VectorXd e0(3), e1(3);
  e0 << -0.7, 0.1, 0.8;
  e1 << 0.4, -0.2, 0.9;
  TimeDependentOperator h0, h1;
  h0.dim = h1.dim = 3;
  h0.time_independent = h1.time_independent = true;
  h0.evaluate = [e0](double) -> Matrix { return e0.cast<Complex>().asDiagonal(); };
  h1.evaluate = [e1](double) -> Matrix { return e1.cast<Complex>().asDiagonal(); };

  NoiseModel model(0.8, StrikeDistribution::gaussian(0.0, 1.1));
  std::mt19937_64 rng(5);
  Matrix rho0 = testutil::random_density(rng, 3);

  const double horizon = 3.0;
  IntegrationConfig cfg;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  auto record = propagate::integrate_master(h0, h1, model, DensityMatrix(rho0),
                                            horizon, cfg);
  REQUIRE_FALSE(record.failed);

  Matrix expected(3, 3);
  for (int n = 0; n < 3; ++n) {
    for (int m = 0; m < 3; ++m) {
      const Complex alpha(0.0, -(e0[n] - e0[m]));
      const Complex beta = noise::beta_eigenvalue(model, e1[n] - e1[m]);
      expected(n, m) = rho0(n, m) * std::exp((alpha + beta) * horizon);
    }
  }
  CHECK((record.final_state() - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("two-level generator with J=1, D=0 doubles the Hamiltonian") {
  auto h0 = rap_like_h0(1.3, 8.0);
  std::mt19937_64 rng(7);
  Vector psi0 = testutil::random_state(rng, 2);

  IntegrationConfig cfg;
  auto record = propagate::integrate_two_level(
      h0, h0, {1.0, 0.0}, DensityMatrix::pure(psi0), 8.0, cfg);
  REQUIRE_FALSE(record.failed);

  auto unit = propagate::integrate_unitary(scaled(h0, 2.0), psi0, 0.0, 8.0, cfg);
  Matrix expected = (unit.state * unit.state.adjoint()).eval();
  CHECK((record.final_state() - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("strong noise pins an eigenstate of a static H0 = H1") {
  Matrix h(2, 2);
  h << 0.4, Complex(0.3, -0.2), Complex(0.3, 0.2), -0.4;
  TimeDependentOperator op;
  op.dim = 2;
  op.time_independent = true;
  op.evaluate = [h](double) { return h; };

  auto es = qcore::eigendecompose(qcore::HermitianOperator(h));
  Vector phi = es.vectors.col(1);
  auto record = propagate::integrate_two_level(
      op, op, {0.0, 50.0}, DensityMatrix::pure(phi), 5.0, IntegrationConfig{});
  REQUIRE_FALSE(record.failed);
  const double overlap =
      (phi.adjoint() * record.final_state() * phi)(0, 0).real();
  CHECK(overlap == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two-level closed form agrees with the full master equation") {
  // constant-chi noise Hamiltonian (frequency error) under a swept H0
  auto h0 = rap_like_h0(1.0, 10.0);
  TimeDependentOperator h1;
  h1.dim = 2;
  h1.time_independent = true;
  h1.evaluate = [](double) {
    Matrix m(2, 2);
    m << -0.5, 0.0, 0.0, 0.5;
    return m;
  };

  NoiseModel model(0.7, StrikeDistribution::laplace(0.35));
  const double chi = liouville::two_level_chi(h1.evaluate(0.0));
  auto coeffs = noise::two_level_JD(model, chi);

  Vector psi0(2);
  psi0 << 1.0, 0.0;
  IntegrationConfig cfg;
  auto full = propagate::integrate_master(h0, h1, model,
                                          DensityMatrix::pure(psi0), 10.0, cfg);
  auto reduced = propagate::integrate_two_level(
      h0, h1, coeffs, DensityMatrix::pure(psi0), 10.0, cfg);
  REQUIRE_FALSE(full.failed);
  REQUIRE_FALSE(reduced.failed);
  for (std::size_t k = 0; k < full.times.size(); k += 20) {
    CHECK((full.states[k] - reduced.states[k]).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("unitary propagation: identity, spectral oracle, group property") {
  IntegrationConfig cfg;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;

  auto h0 = rap_like_h0(0.8, 6.0);
  std::mt19937_64 rng(9);
  Vector psi0 = testutil::random_state(rng, 2);

  auto same = propagate::integrate_unitary(h0, psi0, 2.0, 2.0, cfg);
  CHECK((same.map - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  // static H0: U = exp(-i H0 dt) by spectral exponential
  Matrix hm(2, 2);
  hm << 0.3, Complex(0.5, 0.1), Complex(0.5, -0.1), -0.3;
  TimeDependentOperator stat;
  stat.dim = 2;
  stat.time_independent = true;
  stat.evaluate = [hm](double) { return hm; };
  const double dt = 2.7;
  auto forward = propagate::integrate_unitary(stat, psi0, 0.0, dt, cfg);
  Matrix expected = qcore::unitary_kick(qcore::HermitianOperator(hm), dt);
  CHECK((forward.map - expected).cwiseAbs().maxCoeff() < 1e-10);

  // unitarity
  CHECK((forward.map * forward.map.adjoint() - Matrix::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-9);

  // composition and backward round trip on the time-dependent problem
  auto u_ab = propagate::integrate_unitary(h0, psi0, 0.0, 3.0, cfg);
  auto u_bc = propagate::integrate_unitary(h0, psi0, 3.0, 6.0, cfg);
  auto u_ac = propagate::integrate_unitary(h0, psi0, 0.0, 6.0, cfg);
  CHECK((u_bc.map * u_ab.map - u_ac.map).cwiseAbs().maxCoeff() < 1e-8);

  auto u_back = propagate::integrate_unitary(h0, psi0, 6.0, 0.0, cfg);
  CHECK((u_back.map * u_ac.map - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("coefficient equation: analytic decay and dual representation") {
  // H0 = 0, static H1: d_{n,m}(t) = exp(beta_{n,m} t) d_{n,m}(0)
  std::mt19937_64 rng(11);
  Matrix h1m = testutil::random_hermitian(rng, 2);
  TimeDependentOperator h1;
  h1.dim = 2;
  h1.time_independent = true;
  h1.evaluate = [h1m](double) { return h1m; };
  TimeDependentOperator h0_zero;
  h0_zero.dim = 2;
  h0_zero.time_independent = true;
  h0_zero.evaluate = [](double) { return Matrix::Zero(2, 2); };

  NoiseModel model(1.2, StrikeDistribution::gaussian(0.0, 0.9));
  auto grid = qcore::uniform_grid(0.0, 2.0, 801);
  auto path = liouville::build_noise_eigenbasis_path(h0_zero, h1, model, grid);

  Matrix rho0 = testutil::random_density(rng, 2);
  Matrix v0 = path.vectors[0];
  Matrix d0 = v0.adjoint() * rho0 * v0;
  auto rec = propagate::integrate_coefficients(path, d0);

  const Matrix betas = path.betas[0];
  for (std::size_t k = 0; k < rec.times.size(); k += 100) {
    const double t = rec.times[k];
    for (int n = 0; n < 2; ++n)
      for (int m = 0; m < 2; ++m)
        CHECK(std::abs(rec.coefficients[k](n, m) -
                       d0(n, m) * std::exp(betas(n, m) * t)) < 1e-9);
    // Hermiticity of the coefficient matrix is preserved
    CHECK(qcore::hermiticity_error(rec.coefficients[k]) < 1e-10);
  }

  // time-dependent two-level problem: reconstruction matches the
  // superoperator integration
  auto h0_swept = rap_like_h0(0.9, 4.0);
  TimeDependentOperator h1_swept;
  h1_swept.dim = 2;
  h1_swept.evaluate = [](double t) {
    Matrix m(2, 2);
    m << std::cos(0.4 * t), 0.35, 0.35, -std::cos(0.4 * t);
    return m;
  };
  auto fine = qcore::uniform_grid(0.0, 4.0, 3201);
  auto path2 =
      liouville::build_noise_eigenbasis_path(h0_swept, h1_swept, model, fine);
  Vector psi0(2);
  psi0 << 1.0, 0.0;
  Matrix rho_start = psi0 * psi0.adjoint();
  Matrix d_start =
      path2.vectors[0].adjoint() * rho_start * path2.vectors[0];
  // purity of a pure start: sum |d|^2 = 1
  CHECK(d_start.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));

  auto coeff_rec = propagate::integrate_coefficients(path2, d_start);

  IntegrationConfig cfg;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  cfg.monitor_interval = 4.0 / 1600.0;
  auto master = propagate::integrate_master(
      h0_swept, h1_swept, model, DensityMatrix::pure(psi0), 4.0, cfg);
  REQUIRE_FALSE(master.failed);

  REQUIRE(coeff_rec.times.size() == master.times.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < coeff_rec.times.size(); k += 80) {
    Matrix rho = propagate::reconstruct_from_coefficients(
        path2, 2 * k, coeff_rec.coefficients[k]);
    worst = std::max(worst,
                     (rho - master.states[k]).cwiseAbs().maxCoeff());
    CHECK(coeff_rec.coefficients[k].squaredNorm() <= 1.0 + 1e-8);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("diagnostics catch a trace-breaking generator") {
  propagate::GeneratorAction bad = [](double, const Matrix& rho) {
    return (-0.1 * rho).eval();
  };
  Vector psi0(2);
  psi0 << 1.0, 0.0;
  auto record = propagate::integrate_generator(
      bad, DensityMatrix::pure(psi0), 2.0, IntegrationConfig{});
  CHECK(record.failed);
  CHECK(record.failure_reason.find("trace") != std::string::npos);
}

TEST_CASE("determinism: identical inputs give bit-identical records") {
  auto h0 = rap_like_h0(1.0, 5.0);
  NoiseModel model(0.5, StrikeDistribution::laplace(0.3));
  Vector psi0(2);
  psi0 << 1.0, 0.0;
  auto a = propagate::integrate_master(h0, h0, model, DensityMatrix::pure(psi0),
                                       5.0, IntegrationConfig{});
  auto b = propagate::integrate_master(h0, h0, model, DensityMatrix::pure(psi0),
                                       5.0, IntegrationConfig{});
  REQUIRE(a.times.size() == b.times.size());
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    CHECK((a.states[k] - b.states[k]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("tolerance tightening improves the final state") {
  auto h0 = rap_like_h0(1.0, 20.0);
  Vector psi0(2);
  psi0 << 1.0, 0.0;
  auto rho0 = DensityMatrix::pure(psi0);

  IntegrationConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  tight.monitor_interval = 10.0;
  auto reference = propagate::integrate_two_level(h0, h0, {0.0, 0.05}, rho0,
                                                  20.0, tight);

  // step-halving study at the nominal order: global error ~ h^5
  std::vector<double> step_errors;
  for (double step : {0.5, 0.25, 0.125}) {
    IntegrationConfig cfg;
    cfg.rel_tol = 1e-3;
    cfg.abs_tol = 1e-3;
    cfg.max_step = step;
    cfg.initial_step = step;
    cfg.monitor_interval = 10.0;
    auto run = propagate::integrate_two_level(h0, h0, {0.0, 0.05}, rho0, 20.0,
                                              cfg);
    step_errors.push_back(
        (run.final_state() - reference.final_state()).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 1; i < step_errors.size(); ++i) {
    const double ratio = step_errors[i - 1] / step_errors[i];
    CHECK(ratio > 12.0);   // at least fourth order
    CHECK(ratio < 100.0);  // and not accidentally exact
  }

  // tolerance tightening reduces the error
  std::vector<double> errors;
  for (double tol : {1e-5, 1e-7, 1e-9}) {
    IntegrationConfig cfg;
    cfg.rel_tol = tol;
    cfg.abs_tol = tol * 1e-2;
    cfg.monitor_interval = 10.0;
    auto run = propagate::integrate_two_level(h0, h0, {0.0, 0.05}, rho0, 20.0,
                                              cfg);
    errors.push_back(
        (run.final_state() - reference.final_state()).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 1; i < errors.size(); ++i)
    CHECK(errors[i] < errors[i - 1]);
  CHECK(errors.back() < errors.front() / 50.0);

  // conservation at the default tolerances
  auto defaults = propagate::integrate_two_level(h0, h0, {0.0, 0.05}, rho0,
                                                 20.0, IntegrationConfig{});
  CHECK(defaults.worst_trace_error() <= 1e-8);
  CHECK(defaults.worst_hermiticity_error() <= 1e-10);
  CHECK(defaults.worst_min_eigenvalue() >= -1e-7);
}
