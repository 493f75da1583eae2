#include "poissonq/liouvillian.hpp"

#include "poissonq/quadrature.hpp"

#include <cmath>

namespace poissonq::liouville {

namespace {

Matrix kick_matrix(const qcore::EigenSystem& es, double xi) {
  Vector phases(es.values.size());
  for (Eigen::Index n = 0; n < es.values.size(); ++n)
    phases[n] = std::exp(Complex(0.0, -xi * es.values[n]));
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

}  // namespace

Matrix SuperoperatorBuild::apply(const Matrix& rho) const {
  return qcore::devectorize(
      {dim, matrix * qcore::vectorize_operator(rho).coords});
}

// --------------------------- elementary superoperators -----------------------

Matrix left_multiply_superop(const Matrix& a) {
  const Eigen::Index d = a.rows();
  Matrix s = Matrix::Zero(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) s(i * d + j, k * d + j) = a(i, k);
  return s;
}

Matrix right_multiply_superop(const Matrix& b) {
  const Eigen::Index d = b.rows();
  Matrix s = Matrix::Zero(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index l = 0; l < d; ++l) s(i * d + j, i * d + l) = b(l, j);
  return s;
}

Matrix commutator_superop(const Matrix& h) {
  return left_multiply_superop(h) - right_multiply_superop(h);
}

Matrix conjugation_superop(const Matrix& a) {
  const Eigen::Index d = a.rows();
  Matrix s(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l)
          s(i * d + j, k * d + l) = a(i, k) * std::conj(a(j, l));
  return s;
}

// --------------------------- builders -----------------------------------------

SuperoperatorBuild build_L0(const HermitianOperator& h0) {
  SuperoperatorBuild out;
  out.dim = h0.dim();
  out.matrix = Complex(0.0, -1.0) * commutator_superop(h0.matrix());
  out.kind = GeneratorKind::l0;
  return out;
}

Vector NoiseEigenbasis::projector(Eigen::Index n, Eigen::Index m) const {
  const Eigen::Index d = frame.vectors.rows();
  Vector b(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      b[i * d + j] = frame.vectors(i, n) * std::conj(frame.vectors(j, m));
  return b;
}

std::pair<SuperoperatorBuild, NoiseEigenbasis> build_L1_spectral(
    const HermitianOperator& h1, const noise::NoiseModel& model) {
  NoiseEigenbasis basis;
  basis.frame = qcore::eigendecompose(h1);
  basis.betas = betas_from_gaps(basis.frame.values, model);

  const Eigen::Index d = h1.dim();
  SuperoperatorBuild out;
  out.dim = d;
  out.kind = GeneratorKind::l1;
  out.matrix = Matrix::Zero(d * d, d * d);
  for (Eigen::Index n = 0; n < d; ++n) {
    for (Eigen::Index m = 0; m < d; ++m) {
      if (basis.betas(n, m) == Complex(0.0, 0.0)) continue;
      const Vector b = basis.projector(n, m);
      out.matrix += basis.betas(n, m) * (b * b.adjoint());
    }
  }
  return {std::move(out), std::move(basis)};
}

SuperoperatorBuild build_L1_series(const HermitianOperator& h1,
                                   const noise::NoiseModel& model,
                                   int max_terms) {
  const Eigen::Index d = h1.dim();
  const Matrix c = commutator_superop(h1.matrix());
  Matrix power = Matrix::Identity(d * d, d * d);
  Matrix sum = Matrix::Zero(d * d, d * d);
  int consecutive_small = 0;
  for (int s = 1; s <= max_terms; ++s) {
    power = (power * c).eval();
    power *= Complex(0.0, -1.0) / static_cast<double>(s);
    const double ms = model.distribution.moment(s);
    if (ms != 0.0) {
      sum += (model.nu * ms) * power;
    }
    const double term_norm = std::abs(model.nu * ms) * power.norm();
    if (term_norm <= 1e-12 * std::max(sum.norm(), 1e-30)) {
      if (++consecutive_small >= 2) {
        SuperoperatorBuild out;
        out.dim = d;
        out.matrix = std::move(sum);
        out.kind = GeneratorKind::l1;
        return out;
      }
    } else {
      consecutive_small = 0;
    }
  }
  throw std::runtime_error("build_L1_series: no convergence within " +
                           std::to_string(max_terms) + " terms");
}

SuperoperatorBuild build_L1_quadrature(const HermitianOperator& h1,
                                       const noise::NoiseModel& model,
                                       double abs_tol) {
  const Eigen::Index d = h1.dim();
  const Matrix identity = Matrix::Identity(d * d, d * d);
  const qcore::EigenSystem es = qcore::eigendecompose(h1);

  SuperoperatorBuild out;
  out.dim = d;
  out.kind = GeneratorKind::l1;

  const auto& dist = model.distribution;
  if (dist.kind() == noise::StrikeDistribution::Kind::point_mass) {
    out.matrix = model.nu * (conjugation_superop(kick_matrix(es, dist.value())) -
                             identity);
    return out;
  }
  if (!dist.has_density()) {
    throw std::runtime_error(
        "build_L1_quadrature: distribution has no evaluable density");
  }
  auto [lo, hi] = dist.density_support();
  Matrix integral = quad::integrate(
      [&](double xi) -> Matrix {
        return dist.density(xi) *
               (conjugation_superop(kick_matrix(es, xi)) - identity);
      },
      lo, hi, abs_tol);
  out.matrix = model.nu * integral;
  return out;
}

SuperoperatorBuild build_gaussian_generator(const HermitianOperator& h0,
                                            const HermitianOperator& h1,
                                            double j_tilde, double d_tilde) {
  if (!(d_tilde >= 0.0)) {
    throw std::invalid_argument("build_gaussian_generator: D must be >= 0");
  }
  if (h0.dim() != h1.dim()) {
    throw std::invalid_argument("build_gaussian_generator: dimension mismatch");
  }
  const Matrix c1 = commutator_superop(h1.matrix());
  SuperoperatorBuild out;
  out.dim = h0.dim();
  out.kind = GeneratorKind::gaussian;
  out.matrix =
      Complex(0.0, -1.0) *
          commutator_superop(h0.matrix() + j_tilde * h1.matrix()) -
      d_tilde * (c1 * c1);
  return out;
}

SuperoperatorBuild build_two_level_generator(
    const HermitianOperator& h0, const HermitianOperator& h1,
    const noise::TwoLevelCoefficients& coeffs) {
  if (h0.dim() != 2 || h1.dim() != 2) {
    throw std::invalid_argument("build_two_level_generator: dim must be 2");
  }
  const Matrix c1 = commutator_superop(h1.matrix());
  SuperoperatorBuild out;
  out.dim = 2;
  out.kind = GeneratorKind::two_level;
  out.matrix = Complex(0.0, -1.0) *
                   commutator_superop(h0.matrix() + coeffs.J * h1.matrix()) -
               coeffs.D * (c1 * c1);
  return out;
}

// --------------------------- matrix-free actions ------------------------------

Matrix apply_L0(const Matrix& h0, const Matrix& rho) {
  return Complex(0.0, -1.0) * (h0 * rho - rho * h0);
}

Matrix apply_L1_spectral(const qcore::EigenSystem& es, const Matrix& betas,
                         const Matrix& rho) {
  const Matrix in_frame = es.vectors.adjoint() * rho * es.vectors;
  return es.vectors * betas.cwiseProduct(in_frame) * es.vectors.adjoint();
}

Matrix betas_from_gaps(const Eigen::VectorXd& values,
                       const noise::NoiseModel& model) {
  const Eigen::Index d = values.size();
  Matrix betas(d, d);
  for (Eigen::Index n = 0; n < d; ++n) {
    betas(n, n) = 0.0;
    for (Eigen::Index m = n + 1; m < d; ++m) {
      const Complex b = noise::beta_eigenvalue(model, values[n] - values[m]);
      betas(n, m) = b;
      betas(m, n) = std::conj(b);
    }
  }
  return betas;
}

Matrix betas_from_coefficients(const Eigen::VectorXd& values,
                               const noise::TwoLevelCoefficients& coeffs) {
  const Eigen::Index d = values.size();
  Matrix betas(d, d);
  for (Eigen::Index n = 0; n < d; ++n) {
    for (Eigen::Index m = 0; m < d; ++m) {
      const double gap = values[n] - values[m];
      betas(n, m) = Complex(-coeffs.D * gap * gap, -coeffs.J * gap);
    }
  }
  return betas;
}

Matrix betas_for(const Eigen::VectorXd& values, const NoiseSpec& spec) {
  if (std::holds_alternative<noise::NoiseModel>(spec)) {
    return betas_from_gaps(values, std::get<noise::NoiseModel>(spec));
  }
  return betas_from_coefficients(values,
                                 std::get<noise::TwoLevelCoefficients>(spec));
}

double two_level_chi(const Matrix& h1) {
  if (h1.rows() != 2 || h1.cols() != 2) {
    throw std::invalid_argument("two_level_chi: dim must be 2");
  }
  const Matrix traceless = h1 - (h1.trace() / 2.0) * Matrix::Identity(2, 2);
  return traceless.squaredNorm() / 2.0;
}

// --------------------------- eigenbasis coefficient equation ------------------

Matrix coupling_W(const Matrix& frame_vectors, const Matrix& frame_vectors_dot,
                  const Matrix& h0) {
  return frame_vectors.adjoint() * frame_vectors_dot +
         Complex(0.0, 1.0) * (frame_vectors.adjoint() * h0 * frame_vectors);
}

Matrix eigenbasis_rhs(const Matrix& betas, const Matrix& w, const Matrix& d) {
  return betas.cwiseProduct(d) - (w * d - d * w);
}

Matrix eigenbasis_rhs(const NoiseEigenbasis& basis, const Matrix& h0,
                      const Matrix& frame_vectors_dot, const Matrix& d) {
  const Matrix w = coupling_W(basis.frame.vectors, frame_vectors_dot, h0);
  return eigenbasis_rhs(basis.betas, w, d);
}

NoiseEigenbasisPath build_noise_eigenbasis_path(
    const TimeDependentOperator& h0, const TimeDependentOperator& h1,
    const NoiseSpec& spec, const std::vector<double>& grid) {
  if (std::holds_alternative<noise::TwoLevelCoefficients>(spec) && h1.dim != 2) {
    throw std::invalid_argument(
        "build_noise_eigenbasis_path: (J, D) coefficients require dim 2");
  }
  qcore::EigenFrame frame = qcore::track_eigenframe(h1, grid);

  NoiseEigenbasisPath path;
  path.times = frame.times;
  path.vectors = frame.vectors;
  path.values = frame.values;
  path.betas.reserve(grid.size());
  path.g.reserve(grid.size());
  path.k.reserve(grid.size());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    path.betas.push_back(betas_for(frame.values[idx], spec));
    const Matrix vdot = frame.vector_derivative(idx);
    path.g.push_back(frame.vectors[idx].adjoint() * vdot);
    path.k.push_back(frame.vectors[idx].adjoint() * h0.evaluate(grid[idx]) *
                     frame.vectors[idx]);
  }
  return path;
}

NoiseEigenbasisPath replace_betas(NoiseEigenbasisPath path,
                                  const NoiseSpec& spec) {
  for (std::size_t idx = 0; idx < path.size(); ++idx) {
    path.betas[idx] = betas_for(path.values[idx], spec);
  }
  return path;
}

}  // namespace poissonq::liouville
