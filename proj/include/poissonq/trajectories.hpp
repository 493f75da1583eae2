// trajectories.hpp — Stochastic oracle for the master equation: single noise
// realizations evolve unitarily between Poisson-timed kicks; ensembles average
// them with per-trajectory RNG streams and block-deterministic reduction.

#pragma once

#include "poissonq/noise.hpp"
#include "poissonq/propagate.hpp"
#include "poissonq/qcore.hpp"

#include <cstdint>
#include <vector>

namespace poissonq::traj {

using propagate::IntegrationConfig;
using qcore::DensityMatrix;
using qcore::Matrix;
using qcore::TimeDependentOperator;
using qcore::Vector;

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Matrix> states;  // rho at the sample times
};

// Pure-state realization: psi evolves under H0 between strikes; strike i
// applies exp(-i xi_i H1(t_i)). Strikes must be sorted and inside (0, horizon).
TrajectoryRecord run_trajectory(const TimeDependentOperator& h0,
                                const TimeDependentOperator& h1,
                                const std::vector<noise::Strike>& strikes,
                                const Vector& psi0, double horizon,
                                const IntegrationConfig& cfg);

// Mixed-state realization of the same process.
TrajectoryRecord run_trajectory(const TimeDependentOperator& h0,
                                const TimeDependentOperator& h1,
                                const std::vector<noise::Strike>& strikes,
                                const DensityMatrix& rho0, double horizon,
                                const IntegrationConfig& cfg);

struct TrajectoryEnsemble {
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<Matrix> mean_state;
  std::vector<double> std_error;  // Frobenius norm of the elementwise SEM
  std::vector<Eigen::MatrixXd> elementwise_std_error;
};

// Sample mean over n_traj realizations with streams keyed by (seed, index).
// The reduction is blocked so the result is bit-identical for any worker
// count (POISSONQ_WORKERS, default: hardware concurrency).
TrajectoryEnsemble average_ensemble(const TimeDependentOperator& h0,
                                    const TimeDependentOperator& h1,
                                    const noise::NoiseModel& model,
                                    const DensityMatrix& rho0, double horizon,
                                    std::size_t n_traj, std::uint64_t seed,
                                    const IntegrationConfig& cfg);

struct ComparisonReport {
  std::vector<double> deviation;  // ||mean - rho||_F / std_error per time
  double max_deviation = 0.0;
  double fraction_within = 1.0;  // share of times with deviation <= 3
  bool pass = false;             // fraction_within >= 0.99
};

ComparisonReport compare_to_master(const TrajectoryEnsemble& ensemble,
                                   const propagate::PropagationRecord& record);

std::size_t worker_count();

}  // namespace poissonq::traj
