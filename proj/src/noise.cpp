#include "poissonq/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace poissonq::noise {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr double kSeriesRelTol = 1e-12;

}  // namespace

// --------------------------- RngStream ---------------------------------------

RngStream::RngStream(std::uint64_t seed, std::uint64_t index)
    : engine_(splitmix64(splitmix64(seed) ^
                         (0x9E3779B97F4A7C15ULL * (index + 1)))) {}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = std::max(1.0 - uniform01(), 1e-300);
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

// --------------------------- StrikeDistribution ------------------------------

StrikeDistribution StrikeDistribution::laplace(double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("StrikeDistribution::laplace: scale must be > 0");
  }
  StrikeDistribution d;
  d.kind_ = Kind::laplace;
  d.scale_ = scale;
  return d;
}

StrikeDistribution StrikeDistribution::gaussian(double mean, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument(
        "StrikeDistribution::gaussian: sigma must be > 0");
  }
  StrikeDistribution d;
  d.kind_ = Kind::gaussian;
  d.mean_ = mean;
  d.sigma_ = sigma;
  return d;
}

StrikeDistribution StrikeDistribution::point_mass(double value) {
  StrikeDistribution d;
  d.kind_ = Kind::point_mass;
  d.value_ = value;
  return d;
}

StrikeDistribution StrikeDistribution::custom(
    std::vector<double> raw_moments, std::function<Complex(double)> characteristic,
    std::function<double(RngStream&)> sampler) {
  if (raw_moments.empty() && !characteristic) {
    throw std::invalid_argument(
        "StrikeDistribution::custom: need moments or a characteristic function");
  }
  StrikeDistribution d;
  d.kind_ = Kind::custom;
  d.moments_ = std::move(raw_moments);
  d.characteristic_ = std::move(characteristic);
  d.sampler_ = std::move(sampler);
  return d;
}

double StrikeDistribution::moment(int s) const {
  if (s < 1) throw std::invalid_argument("moment: order must be >= 1");
  switch (kind_) {
    case Kind::laplace:
      if (s % 2 == 1) return 0.0;
      // <xi^{2n}> = (2n)! A^{2n}
      return std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                      s * std::log(scale_));
    case Kind::gaussian: {
      double m_prev = 1.0, m = mean_;
      for (int k = 2; k <= s; ++k) {
        const double next = mean_ * m + (k - 1) * sigma_ * sigma_ * m_prev;
        m_prev = m;
        m = next;
      }
      return s == 0 ? 1.0 : m;
    }
    case Kind::point_mass:
      return std::pow(value_, s);
    case Kind::custom:
      if (static_cast<std::size_t>(s) > moments_.size()) {
        throw std::invalid_argument(
            "moment: order " + std::to_string(s) +
            " beyond the custom moment table (divergent or unknown)");
      }
      return moments_[static_cast<std::size_t>(s) - 1];
  }
  throw std::logic_error("moment: unreachable");
}

Complex StrikeDistribution::characteristic_function(double x) const {
  switch (kind_) {
    case Kind::laplace:
      return Complex(1.0 / (1.0 + scale_ * scale_ * x * x), 0.0);
    case Kind::gaussian:
      return std::exp(Complex(-0.5 * sigma_ * sigma_ * x * x, mean_ * x));
    case Kind::point_mass:
      return std::exp(Complex(0.0, value_ * x));
    case Kind::custom: {
      if (characteristic_) return characteristic_(x);
      // series sum_{s} (ix)^s <xi^s> / s!
      Complex sum(1.0, 0.0);
      Complex factor(1.0, 0.0);
      int consecutive_small = 0;
      for (int s = 1; s <= static_cast<int>(moments_.size()); ++s) {
        factor *= Complex(0.0, x) / static_cast<double>(s);
        const Complex term = factor * moments_[static_cast<std::size_t>(s) - 1];
        sum += term;
        if (std::abs(term) <= kSeriesRelTol * std::max(std::abs(sum), 1.0)) {
          if (++consecutive_small >= 2) return sum;
        } else {
          consecutive_small = 0;
        }
      }
      throw std::runtime_error(
          "characteristic_function: moment series did not converge at x = " +
          std::to_string(x) + " and no closed form was supplied");
    }
  }
  throw std::logic_error("characteristic_function: unreachable");
}

bool StrikeDistribution::symmetric() const {
  switch (kind_) {
    case Kind::laplace:
      return true;
    case Kind::gaussian:
      return mean_ == 0.0;
    case Kind::point_mass:
      return value_ == 0.0;
    case Kind::custom: {
      for (std::size_t s = 0; s < moments_.size(); s += 2) {
        if (moments_[s] != 0.0) return false;  // odd orders at even indices
      }
      return true;
    }
  }
  return false;
}

bool StrikeDistribution::sampleable() const {
  return kind_ != Kind::custom || static_cast<bool>(sampler_);
}

double StrikeDistribution::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::laplace: {
      const double v = rng.uniform01() - 0.5;
      const double tail = std::max(1.0 - 2.0 * std::abs(v), 1e-300);
      return -scale_ * (v < 0.0 ? -1.0 : 1.0) * std::log(tail);
    }
    case Kind::gaussian:
      return mean_ + sigma_ * rng.normal();
    case Kind::point_mass:
      return value_;
    case Kind::custom:
      if (!sampler_) {
        throw std::runtime_error(
            "sample: custom distribution has no sampler");
      }
      return sampler_(rng);
  }
  throw std::logic_error("sample: unreachable");
}

bool StrikeDistribution::has_density() const {
  return kind_ == Kind::laplace || kind_ == Kind::gaussian;
}

double StrikeDistribution::density(double xi) const {
  switch (kind_) {
    case Kind::laplace:
      return std::exp(-std::abs(xi) / scale_) / (2.0 * scale_);
    case Kind::gaussian: {
      const double z = (xi - mean_) / sigma_;
      return std::exp(-0.5 * z * z) /
             (sigma_ * std::sqrt(2.0 * std::numbers::pi));
    }
    default:
      throw std::runtime_error("density: distribution has no density");
  }
}

std::pair<double, double> StrikeDistribution::density_support() const {
  switch (kind_) {
    case Kind::laplace:
      return {-50.0 * scale_, 50.0 * scale_};
    case Kind::gaussian:
      return {mean_ - 12.0 * sigma_, mean_ + 12.0 * sigma_};
    default:
      throw std::runtime_error("density_support: distribution has no density");
  }
}

std::string StrikeDistribution::describe() const {
  switch (kind_) {
    case Kind::laplace:
      return "laplace(scale=" + std::to_string(scale_) + ")";
    case Kind::gaussian:
      return "gaussian(mean=" + std::to_string(mean_) +
             ", sigma=" + std::to_string(sigma_) + ")";
    case Kind::point_mass:
      return "point_mass(value=" + std::to_string(value_) + ")";
    case Kind::custom:
      return "custom(" + std::to_string(moments_.size()) + " moments)";
  }
  return "unknown";
}

// --------------------------- NoiseModel --------------------------------------

NoiseModel::NoiseModel(double nu_in, StrikeDistribution dist)
    : nu(nu_in), distribution(std::move(dist)) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw std::invalid_argument("NoiseModel: nu must be finite and >= 0");
  }
}

// --------------------------- derived quantities ------------------------------

Complex beta_eigenvalue(const NoiseModel& model, double gap) {
  // beta_{n,m} = nu [C((E_m - E_n)) - 1] with gap = E_n - E_m
  return model.nu * (model.distribution.characteristic_function(-gap) - 1.0);
}

TwoLevelCoefficients two_level_JD(const NoiseModel& model, double chi) {
  if (!(chi >= 0.0)) throw std::invalid_argument("two_level_JD: chi must be >= 0");
  if (chi < 1e-6) {
    // The closed form cancels catastrophically near chi = 0; the moment
    // series is exact there. Fall through only when no moments exist.
    try {
      return {two_level_J_series(model, chi), two_level_D_series(model, chi)};
    } catch (const std::invalid_argument&) {
    }
  }
  const double root = std::sqrt(chi);
  const Complex c = model.distribution.characteristic_function(2.0 * root);
  const double j = model.nu * c.imag() / (2.0 * root);
  const double d = model.nu * (1.0 - c.real()) / (4.0 * chi);
  return {j, d};
}

GaussianLimit gaussian_limit_map(const NoiseModel& model) {
  return {model.nu * model.distribution.moment(1),
          model.nu * model.distribution.moment(2) / 2.0};
}

// --------------------------- sampling ----------------------------------------

std::vector<Strike> sample_strikes(const NoiseModel& model, double horizon,
                                   RngStream& rng) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("sample_strikes: horizon must be > 0");
  }
  if (!model.distribution.sampleable()) {
    throw std::runtime_error(
        "sample_strikes: distribution has no sampler (custom without one)");
  }
  const double lambda = model.nu * horizon;
  std::vector<Strike> strikes;
  if (lambda == 0.0) return strikes;

  // Poisson(lambda) count: unit-rate exponential interarrivals until lambda.
  std::size_t count = 0;
  double s = 0.0;
  while (true) {
    s += -std::log(std::max(1.0 - rng.uniform01(), 1e-300));
    if (s >= lambda) break;
    ++count;
  }

  strikes.resize(count);
  for (auto& strike : strikes) strike.time = horizon * rng.uniform01();
  std::sort(strikes.begin(), strikes.end(),
            [](const Strike& a, const Strike& b) { return a.time < b.time; });
  for (auto& strike : strikes) strike.strength = model.distribution.sample(rng);
  return strikes;
}

// --------------------------- series cross-check forms ------------------------

Complex beta_series(const NoiseModel& model, double gap, int max_terms) {
  Complex sum(0.0, 0.0);
  Complex factor(1.0, 0.0);
  int consecutive_small = 0;
  for (int s = 1; s <= max_terms; ++s) {
    factor *= Complex(0.0, -gap) / static_cast<double>(s);
    const Complex term = factor * model.distribution.moment(s);
    sum += term;
    if (std::abs(term) <=
        kSeriesRelTol * std::max(std::abs(sum), 1e-30)) {
      if (++consecutive_small >= 2) return model.nu * sum;
    } else {
      consecutive_small = 0;
    }
  }
  throw std::runtime_error("beta_series: no convergence within " +
                           std::to_string(max_terms) + " terms");
}

double two_level_J_series(const NoiseModel& model, double chi, int max_terms) {
  double sum = 0.0;
  double factor = 1.0;  // (-4 chi)^l / (2l+1)!
  for (int l = 0; l <= max_terms; ++l) {
    if (l > 0) factor *= -4.0 * chi / ((2.0 * l) * (2.0 * l + 1.0));
    const double term = factor * model.distribution.moment(2 * l + 1);
    sum += term;
    if (l > 0 && std::abs(term) <= kSeriesRelTol * std::max(std::abs(sum), 1e-30)) {
      return model.nu * sum;
    }
  }
  throw std::runtime_error("two_level_J_series: no convergence within " +
                           std::to_string(max_terms) + " terms");
}

double two_level_D_series(const NoiseModel& model, double chi, int max_terms) {
  double sum = 0.0;
  double factor = 0.5;  // (-1)^{k+1} 4^{k-1} chi^{k-1} / (2k)!
  for (int k = 1; k <= max_terms; ++k) {
    if (k > 1) factor *= -4.0 * chi / ((2.0 * k - 1.0) * (2.0 * k));
    const double term = factor * model.distribution.moment(2 * k);
    sum += term;
    if (k > 1 && std::abs(term) <= kSeriesRelTol * std::max(std::abs(sum), 1e-30)) {
      return model.nu * sum;
    }
  }
  throw std::runtime_error("two_level_D_series: no convergence within " +
                           std::to_string(max_terms) + " terms");
}

}  // namespace poissonq::noise
