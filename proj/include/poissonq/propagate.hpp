// propagate.hpp — Time integration of the master equation (superoperator and
// L1-eigenbasis coefficient forms), unitary propagation for the noiseless
// problem, and conservation monitoring.

#pragma once

#include "poissonq/liouvillian.hpp"
#include "poissonq/noise.hpp"
#include "poissonq/qcore.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace poissonq::propagate {

using qcore::Complex;
using qcore::DensityMatrix;
using qcore::Matrix;
using qcore::TimeDependentOperator;
using qcore::Vector;

struct IntegrationConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.0;          // 0: unlimited
  double initial_step = 0.0;      // 0: automatic
  double monitor_interval = 0.0;  // 0: horizon / 200
};

// Diagnostic bounds for recorded states. A breach marks the record failed.
inline constexpr double kTraceErrorBound = 1e-8;
inline constexpr double kHermiticityBound = 1e-10;
inline constexpr double kMinEigenvalueBound = -1e-7;

struct Diagnostics {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
};

struct PropagationRecord {
  std::vector<double> times;
  std::vector<Matrix> states;
  std::vector<Diagnostics> diagnostics;
  bool failed = false;
  double failure_time = 0.0;
  std::string failure_reason;

  const Matrix& final_state() const { return states.back(); }
  double worst_trace_error() const;
  double worst_hermiticity_error() const;
  double worst_min_eigenvalue() const;
};

// --------------------------- generic adaptive RK45 ---------------------------

using OdeRhs = std::function<void(double, const Vector&, Vector&)>;
// Called at each sample time; may adjust y (hygiene); returns false to stop.
using OdeObserver = std::function<bool(std::size_t, double, Vector&)>;

// Dormand-Prince 5(4) with step clipping to the sample times. Sample times
// must be strictly monotone starting from t0 (either direction). Throws
// std::runtime_error on step-size underflow.
Vector integrate_ode(const OdeRhs& rhs, Vector y0, double t0,
                     std::span<const double> sample_times,
                     const IntegrationConfig& cfg,
                     const OdeObserver& observer = {});

// --------------------------- master-equation integrators ---------------------

// rho -> d rho / dt at time t
using GeneratorAction = std::function<Matrix(double, const Matrix&)>;

PropagationRecord integrate_generator(const GeneratorAction& rhs,
                                      const DensityMatrix& rho0,
                                      double horizon,
                                      const IntegrationConfig& cfg);

// Full Poisson master equation: rho_dot = L0(rho) + L1(rho), with L1 applied
// spectrally from the instantaneous H1 eigensystem.
PropagationRecord integrate_master(const TimeDependentOperator& h0,
                                   const TimeDependentOperator& h1,
                                   const noise::NoiseModel& model,
                                   const DensityMatrix& rho0, double horizon,
                                   const IntegrationConfig& cfg);

// Two-level closed form: rho_dot = -i[(H0 + J H1), rho] - D [H1, [H1, rho]].
PropagationRecord integrate_two_level(const TimeDependentOperator& h0,
                                      const TimeDependentOperator& h1,
                                      const noise::TwoLevelCoefficients& coeffs,
                                      const DensityMatrix& rho0, double horizon,
                                      const IntegrationConfig& cfg);

// Noise generator alone: rho_dot = L1(rho) (the naive strong-noise equation).
PropagationRecord integrate_noise_only(const TimeDependentOperator& h1,
                                       const liouville::NoiseSpec& spec,
                                       const DensityMatrix& rho0,
                                       double horizon,
                                       const IntegrationConfig& cfg);

// The L1 action used by the above, exposed for reuse.
Matrix noise_action(const TimeDependentOperator& h1,
                    const liouville::NoiseSpec& spec, double t,
                    const Matrix& rho);

// --------------------------- unitary propagation -----------------------------

// U0(t_to, t_from) and the evolved state; t_to < t_from integrates backward.
struct UnitaryResult {
  Matrix map;
  Vector state;
};
UnitaryResult integrate_unitary(const TimeDependentOperator& h0,
                                const Vector& psi0, double t_from, double t_to,
                                const IntegrationConfig& cfg);

// U0(t_k, t_from) at each requested time (monotone from t_from).
struct UnitaryPath {
  std::vector<double> times;
  std::vector<Matrix> maps;
};
UnitaryPath integrate_unitary_path(const TimeDependentOperator& h0,
                                   double t_from,
                                   const std::vector<double>& sample_times,
                                   const IntegrationConfig& cfg);

// --------------------------- eigenbasis coefficients -------------------------

// Fixed-step classical RK4 over the path grid, using odd grid indices as the
// half-step stage points; the grid must therefore have odd size. Coefficients
// are recorded at every even grid index.
struct CoefficientRecord {
  std::vector<double> times;
  std::vector<Matrix> coefficients;  // d(t), dim x dim
};

CoefficientRecord integrate_coefficients(
    const liouville::NoiseEigenbasisPath& path, const Matrix& d0);

// rho(t_idx) = V d V^dag reconstruction at a path index.
Matrix reconstruct_from_coefficients(const liouville::NoiseEigenbasisPath& path,
                                     std::size_t idx, const Matrix& d);

std::vector<double> monitor_times(double horizon,
                                  const IntegrationConfig& cfg);

}  // namespace poissonq::propagate
