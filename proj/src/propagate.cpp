#include "poissonq/propagate.hpp"

#include <algorithm>
#include <cmath>

namespace poissonq::propagate {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                 kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0,
                 kC5 = 8.0 / 9.0;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                  double abs_tol, double rel_tol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale =
        abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = std::abs(err[i]) / scale;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

Matrix map_to_matrix(const Vector& y, Eigen::Index d) {
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = y[i * d + j];
  return m;
}

Vector matrix_to_vec(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Vector y(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) y[i * d + j] = m(i, j);
  return y;
}

}  // namespace

double PropagationRecord::worst_trace_error() const {
  double worst = 0.0;
  for (const auto& diag : diagnostics)
    worst = std::max(worst, diag.trace_error);
  return worst;
}

double PropagationRecord::worst_hermiticity_error() const {
  double worst = 0.0;
  for (const auto& diag : diagnostics)
    worst = std::max(worst, diag.hermiticity_error);
  return worst;
}

double PropagationRecord::worst_min_eigenvalue() const {
  double worst = 0.0;
  for (const auto& diag : diagnostics)
    worst = std::min(worst, diag.min_eigenvalue);
  return worst;
}

// --------------------------- generic adaptive RK45 ---------------------------

Vector integrate_ode(const OdeRhs& rhs, Vector y, double t0,
                     std::span<const double> sample_times,
                     const IntegrationConfig& cfg, const OdeObserver& observer) {
  if (sample_times.empty()) return y;
  const double direction = (sample_times.back() >= t0) ? 1.0 : -1.0;
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    const double prev = (k == 0) ? t0 : sample_times[k - 1];
    if ((sample_times[k] - prev) * direction < 0.0) {
      throw std::invalid_argument(
          "integrate_ode: sample times must be monotone from t0");
    }
  }
  const double span = std::abs(sample_times.back() - t0);
  const double time_scale = std::max({std::abs(t0), std::abs(sample_times.back()), 1.0});

  const Eigen::Index n = y.size();
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n),
      yerr(n);

  double t = t0;
  double h = cfg.initial_step > 0.0 ? cfg.initial_step : span * 1e-3;
  if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
  h = std::max(h, 1e-14 * time_scale);

  rhs(t, y, k1);
  bool k1_valid = true;

  std::size_t next_sample = 0;
  // emit samples that coincide with t0
  while (next_sample < sample_times.size() &&
         std::abs(sample_times[next_sample] - t) <= 1e-14 * time_scale) {
    if (observer) {
      if (!observer(next_sample, sample_times[next_sample], y)) return y;
      k1_valid = false;
    }
    ++next_sample;
  }

  while (next_sample < sample_times.size()) {
    if (!k1_valid) {
      rhs(t, y, k1);
      k1_valid = true;
    }
    const double target = sample_times[next_sample];
    double step = std::min(h, std::abs(target - t));
    if (cfg.max_step > 0.0) step = std::min(step, cfg.max_step);
    if (step < 4.0 * std::numeric_limits<double>::epsilon() * time_scale) {
      throw std::runtime_error("integrate_ode: step size underflow at t = " +
                               std::to_string(t));
    }
    const double hs = direction * step;

    ytmp = y + hs * (kA21 * k1);
    rhs(t + kC2 * hs, ytmp, k2);
    ytmp = y + hs * (kA31 * k1 + kA32 * k2);
    rhs(t + kC3 * hs, ytmp, k3);
    ytmp = y + hs * (kA41 * k1 + kA42 * k2 + kA43 * k3);
    rhs(t + kC4 * hs, ytmp, k4);
    ytmp = y + hs * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4);
    rhs(t + kC5 * hs, ytmp, k5);
    ytmp = y + hs * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
    rhs(t + hs, ytmp, k6);
    ynew = y + hs * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
    rhs(t + hs, ynew, k7);
    yerr = hs * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 +
                 kE7 * k7);

    const double err = error_norm(yerr, y, ynew, cfg.abs_tol, cfg.rel_tol);
    if (err <= 1.0) {
      t += hs;
      y.swap(ynew);
      k1.swap(k7);
      const double grow =
          err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
      h = std::max(step * grow, 1e-14 * time_scale);
      if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);

      if (std::abs(t - target) <= 1e-14 * time_scale) {
        t = target;
        while (next_sample < sample_times.size() &&
               std::abs(sample_times[next_sample] - t) <=
                   1e-14 * time_scale) {
          if (observer) {
            if (!observer(next_sample, sample_times[next_sample], y)) return y;
            k1_valid = false;
          }
          ++next_sample;
        }
      }
    } else {
      h = step * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
      if (h <= 1.5e-14 * time_scale) {
        throw std::runtime_error(
            "integrate_ode: step size underflow at t = " + std::to_string(t));
      }
    }
  }
  return y;
}

// --------------------------- master-equation integrators ---------------------

std::vector<double> monitor_times(double horizon, const IntegrationConfig& cfg) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("monitor_times: horizon must be > 0");
  }
  const double interval =
      cfg.monitor_interval > 0.0 ? cfg.monitor_interval : horizon / 200.0;
  const auto n_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::ceil(horizon / interval - 1e-12)));
  return qcore::uniform_grid(0.0, horizon, n_steps + 1);
}

PropagationRecord integrate_generator(const GeneratorAction& rhs,
                                      const DensityMatrix& rho0,
                                      double horizon,
                                      const IntegrationConfig& cfg) {
  const Eigen::Index d = rho0.dim();
  PropagationRecord record;
  const std::vector<double> samples = monitor_times(horizon, cfg);

  OdeRhs vec_rhs = [&](double t, const Vector& yv, Vector& dydt) {
    dydt = matrix_to_vec(rhs(t, map_to_matrix(yv, d)));
  };

  OdeObserver observer = [&](std::size_t, double t, Vector& yv) -> bool {
    Matrix rho = map_to_matrix(yv, d);
    Diagnostics diag;
    diag.hermiticity_error = qcore::hermiticity_error(rho);
    if (diag.hermiticity_error >= kHermiticityBound) {
      record.failed = true;
      record.failure_time = t;
      record.failure_reason = "hermiticity error " +
                              std::to_string(diag.hermiticity_error) +
                              " at t = " + std::to_string(t);
      record.times.push_back(t);
      record.states.push_back(rho);
      record.diagnostics.push_back(diag);
      return false;
    }
    rho = ((rho + rho.adjoint()) / 2.0).eval();  // hygiene
    yv = matrix_to_vec(rho);

    diag.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(rho, Eigen::EigenvaluesOnly);
    diag.min_eigenvalue = solver.eigenvalues().minCoeff();

    record.times.push_back(t);
    record.states.push_back(std::move(rho));
    record.diagnostics.push_back(diag);

    if (diag.trace_error > kTraceErrorBound) {
      record.failed = true;
      record.failure_time = t;
      record.failure_reason = "trace error " +
                              std::to_string(diag.trace_error) +
                              " at t = " + std::to_string(t);
      return false;
    }
    if (diag.min_eigenvalue < kMinEigenvalueBound) {
      record.failed = true;
      record.failure_time = t;
      record.failure_reason = "negative eigenvalue " +
                              std::to_string(diag.min_eigenvalue) +
                              " at t = " + std::to_string(t);
      return false;
    }
    return true;
  };

  try {
    integrate_ode(vec_rhs, matrix_to_vec(rho0.matrix()), 0.0, samples, cfg,
                  observer);
  } catch (const std::runtime_error& e) {
    record.failed = true;
    record.failure_time = record.times.empty() ? 0.0 : record.times.back();
    record.failure_reason = e.what();
  }
  return record;
}

Matrix noise_action(const TimeDependentOperator& h1,
                    const liouville::NoiseSpec& spec, double t,
                    const Matrix& rho) {
  const qcore::EigenSystem es = qcore::eigendecompose(h1.at(t));
  return liouville::apply_L1_spectral(es, liouville::betas_for(es.values, spec),
                                      rho);
}

PropagationRecord integrate_master(const TimeDependentOperator& h0,
                                   const TimeDependentOperator& h1,
                                   const noise::NoiseModel& model,
                                   const DensityMatrix& rho0, double horizon,
                                   const IntegrationConfig& cfg) {
  if (h0.dim != rho0.dim() || h1.dim != rho0.dim()) {
    throw std::invalid_argument("integrate_master: dimension mismatch");
  }
  GeneratorAction rhs;
  if (model.nu == 0.0) {
    rhs = [&h0](double t, const Matrix& rho) -> Matrix {
      return liouville::apply_L0(h0.evaluate(t), rho);
    };
  } else if (h1.time_independent) {
    auto es = qcore::eigendecompose(h1.at(0.0));
    auto betas = liouville::betas_from_gaps(es.values, model);
    rhs = [&h0, es = std::move(es), betas = std::move(betas)](
              double t, const Matrix& rho) -> Matrix {
      return liouville::apply_L0(h0.evaluate(t), rho) +
             liouville::apply_L1_spectral(es, betas, rho);
    };
  } else {
    rhs = [&h0, &h1, &model](double t, const Matrix& rho) -> Matrix {
      const qcore::EigenSystem es = qcore::eigendecompose(h1.at(t));
      return liouville::apply_L0(h0.evaluate(t), rho) +
             liouville::apply_L1_spectral(
                 es, liouville::betas_from_gaps(es.values, model), rho);
    };
  }
  return integrate_generator(rhs, rho0, horizon, cfg);
}

PropagationRecord integrate_two_level(const TimeDependentOperator& h0,
                                      const TimeDependentOperator& h1,
                                      const noise::TwoLevelCoefficients& coeffs,
                                      const DensityMatrix& rho0, double horizon,
                                      const IntegrationConfig& cfg) {
  if (rho0.dim() != 2 || h0.dim != 2 || h1.dim != 2) {
    throw std::invalid_argument("integrate_two_level: dim must be 2");
  }
  GeneratorAction rhs = [&h0, &h1, coeffs](double t,
                                           const Matrix& rho) -> Matrix {
    const Matrix h0m = h0.evaluate(t);
    const Matrix h1m = h1.evaluate(t);
    const Matrix c1 = qcore::commutator(h1m, rho);
    return Complex(0.0, -1.0) *
               (qcore::commutator(h0m, rho) + coeffs.J * c1) -
           coeffs.D * qcore::commutator(h1m, c1);
  };
  return integrate_generator(rhs, rho0, horizon, cfg);
}

PropagationRecord integrate_noise_only(const TimeDependentOperator& h1,
                                       const liouville::NoiseSpec& spec,
                                       const DensityMatrix& rho0,
                                       double horizon,
                                       const IntegrationConfig& cfg) {
  GeneratorAction rhs = [&h1, &spec](double t, const Matrix& rho) -> Matrix {
    return noise_action(h1, spec, t, rho);
  };
  return integrate_generator(rhs, rho0, horizon, cfg);
}

// --------------------------- unitary propagation -----------------------------

UnitaryPath integrate_unitary_path(const TimeDependentOperator& h0,
                                   double t_from,
                                   const std::vector<double>& sample_times,
                                   const IntegrationConfig& cfg) {
  const Eigen::Index d = h0.dim;
  UnitaryPath path;
  path.times = sample_times;
  path.maps.resize(sample_times.size());

  OdeRhs rhs = [&](double t, const Vector& yv, Vector& dydt) {
    const Matrix u = map_to_matrix(yv, d);
    dydt = matrix_to_vec((Complex(0.0, -1.0) * (h0.evaluate(t) * u)).eval());
  };
  OdeObserver observer = [&](std::size_t k, double, Vector& yv) -> bool {
    path.maps[k] = map_to_matrix(yv, d);
    return true;
  };
  integrate_ode(rhs, matrix_to_vec(Matrix::Identity(d, d)), t_from,
                sample_times, cfg, observer);
  return path;
}

UnitaryResult integrate_unitary(const TimeDependentOperator& h0,
                                const Vector& psi0, double t_from, double t_to,
                                const IntegrationConfig& cfg) {
  UnitaryResult out;
  if (t_from == t_to) {
    out.map = Matrix::Identity(h0.dim, h0.dim);
    out.state = psi0;
    return out;
  }
  auto path = integrate_unitary_path(h0, t_from, {t_to}, cfg);
  out.map = path.maps[0];
  out.state = out.map * psi0;
  return out;
}

// --------------------------- eigenbasis coefficients -------------------------

CoefficientRecord integrate_coefficients(
    const liouville::NoiseEigenbasisPath& path, const Matrix& d0) {
  const std::size_t n = path.size();
  if (n < 3 || n % 2 == 0) {
    throw std::invalid_argument(
        "integrate_coefficients: path grid must have odd size >= 3");
  }
  const Eigen::Index d = path.dim();
  if (d0.rows() != d || d0.cols() != d) {
    throw std::invalid_argument("integrate_coefficients: dimension mismatch");
  }

  auto rhs = [&](std::size_t idx, const Matrix& coeffs) {
    return liouville::eigenbasis_rhs(path.betas[idx], path.w(idx), coeffs);
  };

  CoefficientRecord record;
  record.times.reserve(n / 2 + 1);
  record.coefficients.reserve(n / 2 + 1);
  Matrix coeffs = d0;
  record.times.push_back(path.times[0]);
  record.coefficients.push_back(coeffs);

  for (std::size_t idx = 0; idx + 2 <= n - 1; idx += 2) {
    const double h = path.times[idx + 2] - path.times[idx];
    const Matrix k1 = rhs(idx, coeffs);
    const Matrix k2 = rhs(idx + 1, coeffs + (h / 2.0) * k1);
    const Matrix k3 = rhs(idx + 1, coeffs + (h / 2.0) * k2);
    const Matrix k4 = rhs(idx + 2, coeffs + h * k3);
    coeffs += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    record.times.push_back(path.times[idx + 2]);
    record.coefficients.push_back(coeffs);
  }
  return record;
}

Matrix reconstruct_from_coefficients(const liouville::NoiseEigenbasisPath& path,
                                     std::size_t idx, const Matrix& d) {
  return path.vectors[idx] * d * path.vectors[idx].adjoint();
}

}  // namespace poissonq::propagate
