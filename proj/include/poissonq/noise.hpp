// noise.hpp — Strike-strength distributions with characteristic functions,
// moments and samplers; the Poisson noise model (nu, P); two-level J/D
// coefficients; the Gaussian white-noise limit map.

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace poissonq::noise {

using Complex = std::complex<double>;

// --------------------------- reproducible RNG streams ------------------------

// One stream per (seed, index); streams with different indices are
// statistically independent and reproducible regardless of execution order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t index = 0);

  double uniform01();  // [0, 1)
  double normal();     // standard normal (Box-Muller)
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// --------------------------- strike distributions ----------------------------

// Probability law of kick strengths xi (units of time).
class StrikeDistribution {
 public:
  enum class Kind { laplace, gaussian, point_mass, custom };

  static StrikeDistribution laplace(double scale);
  static StrikeDistribution gaussian(double mean, double sigma);
  static StrikeDistribution point_mass(double value);
  // Moment table indexed from s = 1; optional closed-form characteristic
  // function and sampler. Without a closed form, the characteristic function
  // is summed from the moment series and rejected if it does not converge.
  static StrikeDistribution custom(
      std::vector<double> raw_moments,
      std::function<Complex(double)> characteristic = {},
      std::function<double(RngStream&)> sampler = {});

  Kind kind() const { return kind_; }
  // C(x) = <exp(i xi x)>
  Complex characteristic_function(double x) const;
  // <xi^s>, s >= 1
  double moment(int s) const;
  bool symmetric() const;

  bool sampleable() const;
  double sample(RngStream& rng) const;

  bool has_density() const;
  double density(double xi) const;
  // Integration window covering all but a negligible tail of the density.
  std::pair<double, double> density_support() const;

  // parameters (laplace: scale; gaussian: mean, sigma; point_mass: value)
  double scale() const { return scale_; }
  double mean() const { return mean_; }
  double sigma() const { return sigma_; }
  double value() const { return value_; }

  std::string describe() const;

 private:
  StrikeDistribution() = default;

  Kind kind_ = Kind::point_mass;
  double scale_ = 0.0, mean_ = 0.0, sigma_ = 0.0, value_ = 0.0;
  std::vector<double> moments_;
  std::function<Complex(double)> characteristic_;
  std::function<double(RngStream&)> sampler_;
};

// --------------------------- noise model -------------------------------------

struct NoiseModel {
  double nu = 0.0;  // strike frequency, 1/time
  StrikeDistribution distribution;

  NoiseModel(double nu_in, StrikeDistribution dist);
};

// J dimensionless, D in units of time (two-level reduction).
struct TwoLevelCoefficients {
  double J = 0.0;
  double D = 0.0;
};

// --------------------------- derived quantities ------------------------------

// L1 eigenvalue for an H1 gap E_n - E_m: nu [C(-gap) - 1].
Complex beta_eigenvalue(const NoiseModel& model, double gap);

// chi = (E_pm^{(1)})^2 of the traceless two-level noise Hamiltonian.
TwoLevelCoefficients two_level_JD(const NoiseModel& model, double chi);

struct GaussianLimit {
  double J_tilde = 0.0;  // nu <xi>
  double D_tilde = 0.0;  // nu <xi^2> / 2
};
GaussianLimit gaussian_limit_map(const NoiseModel& model);

// --------------------------- sampling ----------------------------------------

struct Strike {
  double time = 0.0;
  double strength = 0.0;
};

// Poisson(nu T) strike count, times i.i.d. uniform on (0, T) returned sorted,
// strengths i.i.d. from the distribution.
std::vector<Strike> sample_strikes(const NoiseModel& model, double horizon,
                                   RngStream& rng);

// --------------------------- series cross-check forms ------------------------

// Moment-series forms of the same quantities (adaptive truncation; throw if
// not converged within max_terms).
Complex beta_series(const NoiseModel& model, double gap, int max_terms = 60);
double two_level_J_series(const NoiseModel& model, double chi,
                          int max_terms = 60);
double two_level_D_series(const NoiseModel& model, double chi,
                          int max_terms = 60);

}  // namespace poissonq::noise
