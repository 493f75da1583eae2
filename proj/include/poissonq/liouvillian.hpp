// liouvillian.hpp — Superoperator construction on the vectorized (row-major)
// density-matrix space: the coherent generator L0, three independent builders
// for the Poisson-noise generator L1, the Gaussian-limit and two-level
// closed-form generators, and the L1-eigenbasis coefficient equation.

#pragma once

#include "poissonq/noise.hpp"
#include "poissonq/qcore.hpp"

#include <utility>
#include <variant>
#include <vector>

namespace poissonq::liouville {

using qcore::Complex;
using qcore::HermitianOperator;
using qcore::Matrix;
using qcore::TimeDependentOperator;
using qcore::Vector;

enum class GeneratorKind { l0, l1, total, gaussian, two_level };

struct SuperoperatorBuild {
  Eigen::Index dim = 0;
  Matrix matrix;  // dim^2 x dim^2, acts on row-major vec(rho)
  GeneratorKind kind = GeneratorKind::total;

  Matrix apply(const Matrix& rho) const;
};

// Noise is specified either by a full model (nu, P) or, for two-level
// systems, directly by the reduced coefficients (J, D).
using NoiseSpec = std::variant<noise::NoiseModel, noise::TwoLevelCoefficients>;

// --------------------------- elementary superoperators -----------------------

Matrix left_multiply_superop(const Matrix& a);   // rho -> a rho
Matrix right_multiply_superop(const Matrix& b);  // rho -> rho b
Matrix commutator_superop(const Matrix& h);      // rho -> [h, rho]
Matrix conjugation_superop(const Matrix& a);     // rho -> a rho a^dag

// --------------------------- builders -----------------------------------------

SuperoperatorBuild build_L0(const HermitianOperator& h0);

// Eigenbasis of L1: B_{n,m} = |phi_n><phi_m| built from the H1 frame, with
// eigenvalues beta_{n,m}.
struct NoiseEigenbasis {
  qcore::EigenSystem frame;
  Matrix betas;  // dim x dim

  Vector projector(Eigen::Index n, Eigen::Index m) const;  // vec(B_{n,m})
};

// Exact for any distribution with an evaluable characteristic function.
std::pair<SuperoperatorBuild, NoiseEigenbasis> build_L1_spectral(
    const HermitianOperator& h1, const noise::NoiseModel& model);

// Moment series Eq. form; rejects if not converged within max_terms.
SuperoperatorBuild build_L1_series(const HermitianOperator& h1,
                                   const noise::NoiseModel& model,
                                   int max_terms = 60);

// Kick-integral form nu int P(xi) (A_xi rho A_xi^dag - rho) dxi.
SuperoperatorBuild build_L1_quadrature(const HermitianOperator& h1,
                                       const noise::NoiseModel& model,
                                       double abs_tol = 1e-10);

SuperoperatorBuild build_gaussian_generator(const HermitianOperator& h0,
                                            const HermitianOperator& h1,
                                            double j_tilde, double d_tilde);

SuperoperatorBuild build_two_level_generator(
    const HermitianOperator& h0, const HermitianOperator& h1,
    const noise::TwoLevelCoefficients& coeffs);

// --------------------------- matrix-free actions ------------------------------

Matrix apply_L0(const Matrix& h0, const Matrix& rho);  // -i [h0, rho]

// V (betas o (V^dag rho V)) V^dag
Matrix apply_L1_spectral(const qcore::EigenSystem& es, const Matrix& betas,
                         const Matrix& rho);

Matrix betas_from_gaps(const Eigen::VectorXd& values,
                       const noise::NoiseModel& model);
Matrix betas_from_coefficients(const Eigen::VectorXd& values,
                               const noise::TwoLevelCoefficients& coeffs);
Matrix betas_for(const Eigen::VectorXd& values, const NoiseSpec& spec);

// chi = (E_pm)^2 of the traceless part of a two-level Hamiltonian
double two_level_chi(const Matrix& h1);

// --------------------------- eigenbasis coefficient equation ------------------

// W = G + i K with G = V^dag dV/dt and K = V^dag H0 V. The coefficient
// equation is then d_dot = betas o d - [W, d].
Matrix coupling_W(const Matrix& frame_vectors, const Matrix& frame_vectors_dot,
                  const Matrix& h0);

Matrix eigenbasis_rhs(const Matrix& betas, const Matrix& w, const Matrix& d);
Matrix eigenbasis_rhs(const NoiseEigenbasis& basis, const Matrix& h0,
                      const Matrix& frame_vectors_dot, const Matrix& d);

// Per-time data of the L1 eigenbasis along a uniform grid: the tracked H1
// frame, beta eigenvalues, frame-derivative overlaps G and couplings K.
struct NoiseEigenbasisPath {
  std::vector<double> times;
  std::vector<Matrix> vectors;             // V(t), columns are labels
  std::vector<Eigen::VectorXd> values;     // E^{(1)}(t)
  std::vector<Matrix> betas;               // beta(t)
  std::vector<Matrix> g;                   // V^dag dV/dt (central differences)
  std::vector<Matrix> k;                   // V^dag H0 V

  Eigen::Index dim() const { return vectors.empty() ? 0 : vectors[0].rows(); }
  std::size_t size() const { return times.size(); }
  Matrix w(std::size_t idx) const { return g[idx] + Complex(0.0, 1.0) * k[idx]; }
};

NoiseEigenbasisPath build_noise_eigenbasis_path(
    const TimeDependentOperator& h0, const TimeDependentOperator& h1,
    const NoiseSpec& spec, const std::vector<double>& grid);

// Same frame, new noise strength: recompute only the beta eigenvalues.
NoiseEigenbasisPath replace_betas(NoiseEigenbasisPath path,
                                  const NoiseSpec& spec);

}  // namespace poissonq::liouville
