#include "poissonq/approx.hpp"

#include <cmath>

namespace poissonq::approx {

namespace {

// sum_{(l,k) != (n,m)} M_{n,m,l,k} x_{l,k} for all (n,m) at once
Matrix coupling_apply(const Matrix& w, const Matrix& x) {
  Matrix out = -(w * x - x * w);
  for (Eigen::Index n = 0; n < w.rows(); ++n)
    for (Eigen::Index m = 0; m < w.cols(); ++m)
      out(n, m) += (w(n, n) - w(m, m)) * x(n, m);
  return out;
}

void require_diagonal_noise_kernel(const NoiseEigenbasisPath& path) {
  // beta_{n,m} = 0 iff n = m must hold on the interior of the horizon;
  // a degenerate interior H1 breaks the strong-noise arguments.
  for (std::size_t idx = 1; idx + 1 < path.size(); ++idx) {
    const auto& values = path.values[idx];
    for (Eigen::Index n = 0; n + 1 < values.size(); ++n) {
      if (values[n + 1] - values[n] < qcore::kDegeneracyTol) {
        throw std::invalid_argument(
            "strong noise: H1 degenerate inside the horizon at t = " +
            std::to_string(path.times[idx]));
      }
    }
  }
}

// Symmetric P(xi) gives real negative betas; the strong-noise ansatz assumes
// exactly that.
void require_real_betas(const NoiseEigenbasisPath& path) {
  double scale = 0.0, worst = 0.0;
  for (const auto& betas : path.betas) {
    scale = std::max(scale, betas.cwiseAbs().maxCoeff());
    worst = std::max(worst, betas.imag().cwiseAbs().maxCoeff());
  }
  if (worst > 1e-12 * (1.0 + scale)) {
    throw std::invalid_argument(
        "strong noise: requires a symmetric strike distribution (complex "
        "beta eigenvalues found)");
  }
}

}  // namespace

// --------------------------- fidelity ----------------------------------------

double fidelity(const Matrix& rho, const Vector& target) {
  if (std::abs(target.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("fidelity: target state is not normalized");
  }
  if (rho.rows() != target.size()) {
    throw std::invalid_argument("fidelity: dimension mismatch");
  }
  const double f2 = (target.adjoint() * rho * target)(0, 0).real();
  if (f2 < -1e-10) {
    throw std::invalid_argument("fidelity: overlap " + std::to_string(f2) +
                                " below -1e-10");
  }
  return std::sqrt(std::max(f2, 0.0));
}

double fidelity(const DensityMatrix& rho, const Vector& target) {
  return fidelity(rho.matrix(), target);
}

FidelityCurve fidelity_curve(const propagate::PropagationRecord& record,
                             const TimeDependentOperator& h0, int label) {
  if (label < 0 || label >= h0.dim) {
    throw std::invalid_argument("fidelity_curve: label out of range");
  }
  const auto frame = qcore::track_eigenframe(h0, record.times);
  FidelityCurve curve;
  curve.times = record.times;
  curve.values.reserve(record.times.size());
  for (std::size_t k = 0; k < record.times.size(); ++k) {
    curve.values.push_back(
        fidelity(record.states[k], frame.vectors[k].col(label)));
  }
  return curve;
}

// --------------------------- adiabatic approximation -------------------------

AdiabaticPath adiabatic_state(const TimeDependentOperator& h0,
                              const Vector& amplitudes,
                              const std::vector<double>& grid) {
  if (amplitudes.size() != h0.dim) {
    throw std::invalid_argument("adiabatic_state: amplitude length != dim");
  }
  if (std::abs(amplitudes.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("adiabatic_state: amplitudes not normalized");
  }
  const auto frame = qcore::track_eigenframe(h0, grid);
  const Eigen::Index d = h0.dim;

  AdiabaticPath path;
  path.times = grid;
  path.states.reserve(grid.size());

  Eigen::VectorXd phases = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) {
      const double h = grid[k] - grid[k - 1];
      phases += 0.5 * h * (frame.values[k - 1] + frame.values[k]);
    }
    Vector psi = Vector::Zero(d);
    for (Eigen::Index n = 0; n < d; ++n) {
      psi += amplitudes[n] * std::exp(Complex(0.0, -phases[n])) *
             frame.vectors[k].col(n);
    }
    path.states.push_back(std::move(psi));
  }
  return path;
}

// --------------------------- weak noise --------------------------------------

double noise_sensitivity(const TimeDependentOperator& h0,
                         const TimeDependentOperator& h1,
                         const NoiseSpec& spec, const DensityMatrix& rho0,
                         const Vector& target, double horizon,
                         const IntegrationConfig& cfg, std::size_t n_points) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("noise_sensitivity: horizon must be > 0");
  }
  if (n_points == 0) {
    n_points = std::max<std::size_t>(
        1601, static_cast<std::size_t>(std::ceil(8.0 * horizon)) + 1);
  }
  if (n_points % 2 == 0) ++n_points;
  const std::vector<double> grid = qcore::uniform_grid(0.0, horizon, n_points);

  // forward noiseless propagation of rho0
  const auto forward = propagate::integrate_unitary_path(h0, 0.0, grid, cfg);
  // backward propagation of the target projector
  std::vector<double> reversed(grid.rbegin(), grid.rend());
  const auto backward =
      propagate::integrate_unitary_path(h0, horizon, reversed, cfg);

  const Matrix rho_ad = target * target.adjoint();
  const Matrix rho_start = rho0.matrix();

  const Matrix rho0_final =
      forward.maps.back() * rho_start * forward.maps.back().adjoint();
  const double f0 = fidelity(rho0_final, target);
  if (f0 <= 1e-6) {
    throw std::invalid_argument(
        "noise_sensitivity: F(0) <= 1e-6, expansion point is singular");
  }

  std::vector<double> integrand(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    const Matrix& uf = forward.maps[k];
    const Matrix& ub = backward.maps[n_points - 1 - k];
    const Matrix rho_t = uf * rho_start * uf.adjoint();
    const Matrix rho_tilde = ub * rho_ad * ub.adjoint();
    const Matrix l1_rho = propagate::noise_action(h1, spec, grid[k], rho_t);
    integrand[k] = qcore::hs_inner(rho_tilde, l1_rho).real();
  }

  // composite Simpson
  const double h = grid[1] - grid[0];
  double sum = integrand.front() + integrand.back();
  for (std::size_t k = 1; k + 1 < n_points; ++k) {
    sum += integrand[k] * (k % 2 == 1 ? 4.0 : 2.0);
  }
  const double integral = sum * h / 3.0;
  return integral / (2.0 * f0);
}

double weak_noise_fidelity(double f0, double fprime0, double kappa) {
  return f0 + kappa * fprime0;
}

// --------------------------- strong noise ------------------------------------

StrongNoiseLimit strong_noise_limit(const NoiseEigenbasisPath& path,
                                    const DensityMatrix& rho0,
                                    const Vector& target) {
  if (path.size() < 2) {
    throw std::invalid_argument("strong_noise_limit: path too short");
  }
  require_diagonal_noise_kernel(path);
  require_real_betas(path);
  const Eigen::Index d = path.dim();

  StrongNoiseLimit limit;
  const auto& first_values = path.values[0];
  for (Eigen::Index n = 0; n + 1 < d; ++n) {
    if (first_values[n + 1] - first_values[n] < qcore::kDegeneracyTol) {
      limit.degenerate_start = true;
    }
  }

  limit.initial_populations.resize(d);
  const Matrix& v0 = path.vectors[0];
  for (Eigen::Index n = 0; n < d; ++n) {
    limit.initial_populations[n] =
        (v0.col(n).adjoint() * rho0.matrix() * v0.col(n))(0, 0).real();
  }
  limit.purity = limit.initial_populations.squaredNorm();
  limit.rho_infinity_final =
      rho_infinity_at(path, path.size() - 1, limit.initial_populations);
  limit.fidelity_infinity = fidelity(limit.rho_infinity_final, target);
  return limit;
}

Matrix rho_infinity_at(const NoiseEigenbasisPath& path, std::size_t idx,
                       const Eigen::VectorXd& initial_populations) {
  const Eigen::Index d = path.dim();
  Matrix rho = Matrix::Zero(d, d);
  for (Eigen::Index n = 0; n < d; ++n) {
    rho += initial_populations[n] * path.vectors[idx].col(n) *
           path.vectors[idx].col(n).adjoint();
  }
  return rho;
}

propagate::PropagationRecord naive_strong_noise(
    const TimeDependentOperator& h1, const NoiseSpec& spec,
    const DensityMatrix& rho0, double horizon, const IntegrationConfig& cfg) {
  return propagate::integrate_noise_only(h1, spec, rho0, horizon, cfg);
}

StrongNoiseAccumulators accumulate_lambdas(const NoiseEigenbasisPath& path) {
  StrongNoiseAccumulators acc;
  acc.times = path.times;
  acc.lambda_dot.reserve(path.size());
  acc.lambda.reserve(path.size());
  const Eigen::Index d = path.dim();
  for (std::size_t idx = 0; idx < path.size(); ++idx) {
    Matrix dot = path.betas[idx];
    for (Eigen::Index n = 0; n < d; ++n) {
      for (Eigen::Index m = 0; m < d; ++m) {
        dot(n, m) += Complex(0.0, -(path.k[idx](n, n).real() -
                                    path.k[idx](m, m).real()));
      }
    }
    acc.lambda_dot.push_back(std::move(dot));
  }
  Matrix lambda = Matrix::Zero(d, d);
  acc.lambda.push_back(lambda);
  for (std::size_t idx = 1; idx < path.size(); ++idx) {
    const double h = path.times[idx] - path.times[idx - 1];
    lambda += 0.5 * h * (acc.lambda_dot[idx - 1] + acc.lambda_dot[idx]);
    acc.lambda.push_back(lambda);
  }
  return acc;
}

Complex m_tensor(const Matrix& w, Eigen::Index n, Eigen::Index m,
                 Eigen::Index l, Eigen::Index k) {
  Complex value(0.0, 0.0);
  if (k == m) value -= w(n, l);
  if (n == l) value += w(k, m);
  return value;
}

SecondOrderResult strong_noise_second_order(const NoiseEigenbasisPath& path,
                                            const DensityMatrix& rho0,
                                            const Vector& target) {
  if (path.size() < 2) {
    throw std::invalid_argument("strong_noise_second_order: path too short");
  }
  require_diagonal_noise_kernel(path);
  require_real_betas(path);
  const Eigen::Index d = path.dim();
  const auto acc = accumulate_lambdas(path);

  for (const auto& lambda : acc.lambda) {
    if (lambda.real().maxCoeff() > 1e-12) {
      throw std::runtime_error(
          "strong_noise_second_order: Re(Lambda) > 0; noise is not "
          "dissipative (asymmetric distribution?)");
    }
  }

  const Matrix& v0 = path.vectors[0];
  const Matrix d0 = v0.adjoint() * rho0.matrix() * v0;

  auto exp_elementwise = [](const Matrix& m) -> Matrix {
    return m.unaryExpr([](Complex z) { return std::exp(z); });
  };

  const std::size_t n_times = path.size();
  Matrix a = Matrix::Zero(d, d);  // inner integral, per (l,k)
  Matrix b = Matrix::Zero(d, d);  // outer integral, per (n,m)
  Matrix e_prev = exp_elementwise(acc.lambda[0]);
  Matrix u_prev = coupling_apply(path.w(0), (e_prev.array() * d0.array()).matrix());
  Matrix p_prev = u_prev;  // a(0) = 0 so the second-order payload vanishes

  for (std::size_t idx = 1; idx < n_times; ++idx) {
    const double h = path.times[idx] - path.times[idx - 1];
    const Matrix grow =
        exp_elementwise(acc.lambda[idx] - acc.lambda[idx - 1]);
    const Matrix e_cur = exp_elementwise(acc.lambda[idx]);
    const Matrix u_cur =
        coupling_apply(path.w(idx), (e_cur.array() * d0.array()).matrix());

    a = (grow.array() * (a + 0.5 * h * u_prev).array()).matrix() +
        0.5 * h * u_cur;
    const Matrix p_cur = u_cur + coupling_apply(path.w(idx), a);

    b = (grow.array() * (b + 0.5 * h * p_prev).array()).matrix() +
        0.5 * h * p_cur;

    e_prev = e_cur;
    u_prev = u_cur;
    p_prev = p_cur;
  }

  SecondOrderResult result;
  result.d_final = (e_prev.array() * d0.array()).matrix() + b;
  const Matrix& v_final = path.vectors.back();
  result.rho_final = v_final * result.d_final * v_final.adjoint();
  result.fidelity_value = fidelity(result.rho_final, target);
  return result;
}

}  // namespace poissonq::approx
