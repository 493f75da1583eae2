// approx.hpp — The three analytic regimes around the exact master equation:
// the noiseless adiabatic approximation, the weak-noise fidelity expansion
// F(kappa) ~ F(0) + kappa F'(0), and the strong-noise limit with its naive and
// second-order corrections. Fidelity and purity metrics live here too.

#pragma once

#include "poissonq/liouvillian.hpp"
#include "poissonq/propagate.hpp"
#include "poissonq/qcore.hpp"

#include <vector>

namespace poissonq::approx {

using liouville::NoiseEigenbasisPath;
using liouville::NoiseSpec;
using propagate::IntegrationConfig;
using qcore::Complex;
using qcore::DensityMatrix;
using qcore::Matrix;
using qcore::TimeDependentOperator;
using qcore::Vector;

// --------------------------- fidelity ----------------------------------------

// F = sqrt(<target| rho |target>). Negative overlaps within -1e-10 clip to 0;
// anything lower rejects. Values above 1 are passed through (approximate
// states may overshoot slightly).
double fidelity(const Matrix& rho, const Vector& target);
double fidelity(const DensityMatrix& rho, const Vector& target);

struct FidelityCurve {
  std::vector<double> times;
  std::vector<double> values;
};

// F(t) against the tracked eigenstate `label` of h0 along the record grid.
FidelityCurve fidelity_curve(const propagate::PropagationRecord& record,
                             const TimeDependentOperator& h0, int label);

// --------------------------- adiabatic approximation -------------------------

// psi_ad(t) = sum_n a_n exp(-i int_0^t E_n) phi_n(t) on the parallel-
// transported frame; amplitudes are in the phi_n(0) basis.
struct AdiabaticPath {
  std::vector<double> times;
  std::vector<Vector> states;
};

AdiabaticPath adiabatic_state(const TimeDependentOperator& h0,
                              const Vector& amplitudes,
                              const std::vector<double>& grid);

// --------------------------- weak noise --------------------------------------

// F'(0) of the expansion F(kappa) ~ F(0) + kappa F'(0) for the master
// equation rho_dot = L0 + kappa L1, where L1 is fixed by (h1, spec).
// Computed from the forward noiseless propagation of rho0 and the backward
// propagation of the target projector; quadrature is composite Simpson on a
// uniform grid of n_points (0: automatic, always made odd).
double noise_sensitivity(const TimeDependentOperator& h0,
                         const TimeDependentOperator& h1,
                         const NoiseSpec& spec, const DensityMatrix& rho0,
                         const Vector& target, double horizon,
                         const IntegrationConfig& cfg,
                         std::size_t n_points = 0);

double weak_noise_fidelity(double f0, double fprime0, double kappa);

// --------------------------- strong noise ------------------------------------

// kappa -> infinity limit: the state is pinned to the diagonal of the H1
// eigenbasis with frozen weights c_nn(0).
struct StrongNoiseLimit {
  Eigen::VectorXd initial_populations;  // c_nn(0)
  double purity = 0.0;                  // sum c_nn(0)^2
  Matrix rho_infinity_final;
  double fidelity_infinity = 0.0;
  bool degenerate_start = false;  // H1 degenerate at t = 0 (re-based frame)
};

StrongNoiseLimit strong_noise_limit(const NoiseEigenbasisPath& path,
                                    const DensityMatrix& rho0,
                                    const Vector& target);

Matrix rho_infinity_at(const NoiseEigenbasisPath& path, std::size_t idx,
                       const Eigen::VectorXd& initial_populations);

// Heuristic rho_dot = L1(rho) solution (L0 dropped).
propagate::PropagationRecord naive_strong_noise(
    const TimeDependentOperator& h1, const NoiseSpec& spec,
    const DensityMatrix& rho0, double horizon, const IntegrationConfig& cfg);

// Accumulated exponents Lambda_{n,m}(t) = int_0^t [beta_{n,m} - i(K_nn - K_mm)]
// and the coupling tensor M_{n,m,l,k} = -delta_{km} W_{nl} + delta_{nl} W_{km}.
struct StrongNoiseAccumulators {
  std::vector<double> times;
  std::vector<Matrix> lambda;      // cumulative, Lambda(0) = 0
  std::vector<Matrix> lambda_dot;
};

StrongNoiseAccumulators accumulate_lambdas(const NoiseEigenbasisPath& path);

Complex m_tensor(const Matrix& w, Eigen::Index n, Eigen::Index m,
                 Eigen::Index l, Eigen::Index k);

// Zeroth + first + second order terms of the strong-noise expansion of
// d_{n,m}(T), evaluated on the path grid with exponential-trapezoid
// recursions.
struct SecondOrderResult {
  Matrix d_final;
  Matrix rho_final;
  double fidelity_value = 0.0;
};

SecondOrderResult strong_noise_second_order(const NoiseEigenbasisPath& path,
                                            const DensityMatrix& rho0,
                                            const Vector& target);

}  // namespace poissonq::approx
