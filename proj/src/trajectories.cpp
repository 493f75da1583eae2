#include "poissonq/trajectories.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace poissonq::traj {

namespace {

using qcore::Complex;

constexpr std::size_t kBlockSize = 32;

void check_strikes(const std::vector<noise::Strike>& strikes, double horizon) {
  double prev = 0.0;
  for (const auto& strike : strikes) {
    if (strike.time < prev || strike.time <= 0.0 || strike.time >= horizon) {
      throw std::invalid_argument(
          "run_trajectory: strikes must be sorted inside (0, horizon)");
    }
    prev = strike.time;
  }
}

Vector evolve_state(const TimeDependentOperator& h0, Vector psi, double a,
                    double b, const IntegrationConfig& cfg) {
  if (b <= a) return psi;
  propagate::OdeRhs rhs = [&h0](double t, const Vector& y, Vector& dydt) {
    dydt = (Complex(0.0, -1.0) * (h0.evaluate(t) * y)).eval();
  };
  IntegrationConfig local = cfg;
  if (local.initial_step <= 0.0) local.initial_step = (b - a) * 0.1;
  const double sample[1] = {b};
  return propagate::integrate_ode(rhs, std::move(psi), a, sample, local);
}

Matrix evolve_density(const TimeDependentOperator& h0, const Matrix& rho,
                      double a, double b, const IntegrationConfig& cfg) {
  if (b <= a) return rho;
  const Eigen::Index d = rho.rows();
  propagate::OdeRhs rhs = [&h0, d](double t, const Vector& y, Vector& dydt) {
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = y[i * d + j];
    const Matrix out = liouville::apply_L0(h0.evaluate(t), m);
    dydt.resize(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) dydt[i * d + j] = out(i, j);
  };
  IntegrationConfig local = cfg;
  if (local.initial_step <= 0.0) local.initial_step = (b - a) * 0.1;
  Vector y(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) y[i * d + j] = rho(i, j);
  const double sample[1] = {b};
  y = propagate::integrate_ode(rhs, std::move(y), a, sample, local);
  Matrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = y[i * d + j];
  return out;
}

// Extract the pure state when rho0 is (numerically) rank one.
bool try_extract_pure(const DensityMatrix& rho0, Vector& psi) {
  const double purity = (rho0.matrix() * rho0.matrix()).trace().real();
  if (std::abs(purity - 1.0) > 1e-10) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(rho0.matrix());
  psi = solver.eigenvectors().col(rho0.dim() - 1);
  return true;
}

}  // namespace

TrajectoryRecord run_trajectory(const TimeDependentOperator& h0,
                                const TimeDependentOperator& h1,
                                const std::vector<noise::Strike>& strikes,
                                const Vector& psi0, double horizon,
                                const IntegrationConfig& cfg) {
  check_strikes(strikes, horizon);
  TrajectoryRecord record;
  record.times = propagate::monitor_times(horizon, cfg);
  record.states.reserve(record.times.size());

  Vector psi = psi0;
  double current = 0.0;
  std::size_t next_strike = 0;
  for (double ts : record.times) {
    while (next_strike < strikes.size() && strikes[next_strike].time <= ts) {
      const auto& strike = strikes[next_strike];
      psi = evolve_state(h0, std::move(psi), current, strike.time, cfg);
      psi = (qcore::unitary_kick(h1.at(strike.time), strike.strength) * psi)
                .eval();
      current = strike.time;
      ++next_strike;
    }
    psi = evolve_state(h0, std::move(psi), current, ts, cfg);
    current = ts;
    record.states.push_back(psi * psi.adjoint());
  }
  return record;
}

TrajectoryRecord run_trajectory(const TimeDependentOperator& h0,
                                const TimeDependentOperator& h1,
                                const std::vector<noise::Strike>& strikes,
                                const DensityMatrix& rho0, double horizon,
                                const IntegrationConfig& cfg) {
  Vector psi;
  if (try_extract_pure(rho0, psi)) {
    return run_trajectory(h0, h1, strikes, psi, horizon, cfg);
  }
  check_strikes(strikes, horizon);
  TrajectoryRecord record;
  record.times = propagate::monitor_times(horizon, cfg);
  record.states.reserve(record.times.size());

  Matrix rho = rho0.matrix();
  double current = 0.0;
  std::size_t next_strike = 0;
  for (double ts : record.times) {
    while (next_strike < strikes.size() && strikes[next_strike].time <= ts) {
      const auto& strike = strikes[next_strike];
      rho = evolve_density(h0, rho, current, strike.time, cfg);
      const Matrix kick = qcore::unitary_kick(h1.at(strike.time), strike.strength);
      rho = (kick * rho * kick.adjoint()).eval();
      current = strike.time;
      ++next_strike;
    }
    rho = evolve_density(h0, rho, current, ts, cfg);
    current = ts;
    record.states.push_back(rho);
  }
  return record;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("POISSONQ_WORKERS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) return std::min<std::size_t>(static_cast<std::size_t>(parsed), 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : std::min<unsigned>(hw, 64);
}

TrajectoryEnsemble average_ensemble(const TimeDependentOperator& h0,
                                    const TimeDependentOperator& h1,
                                    const noise::NoiseModel& model,
                                    const DensityMatrix& rho0, double horizon,
                                    std::size_t n_traj, std::uint64_t seed,
                                    const IntegrationConfig& cfg) {
  if (n_traj < 2) {
    throw std::invalid_argument("average_ensemble: need n_traj >= 2");
  }
  const std::vector<double> times = propagate::monitor_times(horizon, cfg);
  const std::size_t n_times = times.size();
  const Eigen::Index d = rho0.dim();

  // Trajectory 0 doubles as the shift reference of the centered accumulation
  // (the naive sum-of-squares cancels catastrophically at small variance).
  std::vector<Matrix> shift;
  {
    noise::RngStream stream(seed, 0);
    const auto strikes = noise::sample_strikes(model, horizon, stream);
    shift = run_trajectory(h0, h1, strikes, rho0, horizon, cfg).states;
  }

  struct BlockSums {
    std::vector<Matrix> sum;              // sum of (rho - shift)
    std::vector<Eigen::MatrixXd> sum_sq;  // elementwise |rho - shift|^2
  };
  const std::size_t n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;
  std::vector<BlockSums> blocks(n_blocks);

  auto run_block = [&](std::size_t block) {
    BlockSums sums;
    sums.sum.assign(n_times, Matrix::Zero(d, d));
    sums.sum_sq.assign(n_times, Eigen::MatrixXd::Zero(d, d));
    const std::size_t begin = block * kBlockSize;
    const std::size_t end = std::min(begin + kBlockSize, n_traj);
    for (std::size_t index = begin; index < end; ++index) {
      noise::RngStream stream(seed, index);
      const auto strikes = noise::sample_strikes(model, horizon, stream);
      const auto record = run_trajectory(h0, h1, strikes, rho0, horizon, cfg);
      for (std::size_t k = 0; k < n_times; ++k) {
        const Matrix centered = record.states[k] - shift[k];
        sums.sum[k] += centered;
        sums.sum_sq[k] += centered.cwiseAbs2();
      }
    }
    blocks[block] = std::move(sums);
  };

  const std::size_t workers = std::min(worker_count(), n_blocks);
  if (workers <= 1) {
    for (std::size_t block = 0; block < n_blocks; ++block) run_block(block);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t block = next.fetch_add(1);
          if (block >= n_blocks) return;
          run_block(block);
        }
      });
    }
    for (auto& thread : pool) thread.join();
  }

  // block-ordered reduction: bit-identical for any worker count
  TrajectoryEnsemble ensemble;
  ensemble.n_traj = n_traj;
  ensemble.seed = seed;
  ensemble.times = times;
  std::vector<Matrix> total(n_times, Matrix::Zero(d, d));
  std::vector<Eigen::MatrixXd> total_sq(n_times, Eigen::MatrixXd::Zero(d, d));
  for (const auto& block : blocks) {
    for (std::size_t k = 0; k < n_times; ++k) {
      total[k] += block.sum[k];
      total_sq[k] += block.sum_sq[k];
    }
  }

  const double n = static_cast<double>(n_traj);
  ensemble.mean_state.resize(n_times);
  ensemble.std_error.resize(n_times);
  ensemble.elementwise_std_error.resize(n_times);
  for (std::size_t k = 0; k < n_times; ++k) {
    ensemble.mean_state[k] = shift[k] + total[k] / n;
    Eigen::MatrixXd variance =
        (total_sq[k] - total[k].cwiseAbs2() / n) / (n - 1.0);
    variance = variance.cwiseMax(0.0);
    ensemble.elementwise_std_error[k] = (variance / n).cwiseSqrt();
    ensemble.std_error[k] = std::sqrt(variance.sum() / n);
  }
  return ensemble;
}

ComparisonReport compare_to_master(const TrajectoryEnsemble& ensemble,
                                   const propagate::PropagationRecord& record) {
  if (ensemble.times.size() != record.times.size()) {
    throw std::invalid_argument("compare_to_master: grid size mismatch");
  }
  for (std::size_t k = 0; k < ensemble.times.size(); ++k) {
    if (std::abs(ensemble.times[k] - record.times[k]) > 1e-9) {
      throw std::invalid_argument("compare_to_master: grids do not match");
    }
  }

  ComparisonReport report;
  report.deviation.resize(ensemble.times.size());
  std::size_t within = 0;
  for (std::size_t k = 0; k < ensemble.times.size(); ++k) {
    const double diff =
        (ensemble.mean_state[k] - record.states[k]).norm();
    // floor the SEM at the integrator accuracy scale so exact (zero-noise)
    // ensembles compare as deviation ~ 0 instead of 0/0
    const double dev = diff / std::max(ensemble.std_error[k], 1e-8);
    report.deviation[k] = dev;
    report.max_deviation = std::max(report.max_deviation, dev);
    if (dev <= 3.0) ++within;
  }
  report.fraction_within =
      static_cast<double>(within) / static_cast<double>(ensemble.times.size());
  report.pass = report.fraction_within >= 0.99;
  return report;
}

}  // namespace poissonq::traj
