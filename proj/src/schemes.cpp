#include "poissonq/schemes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace poissonq::schemes {

using qcore::Complex;

Matrix two_level_hamiltonian(double omega_r, double omega_i, double delta) {
  Matrix h(2, 2);
  const Complex off(omega_r / 2.0, -omega_i / 2.0);
  h << -delta / 2.0, off, std::conj(off), delta / 2.0;
  return h;
}

TimeDependentOperator phase_changing_h0(double omega, double omega0) {
  TimeDependentOperator op;
  op.dim = 2;
  op.evaluate = [omega, omega0](double t) {
    return two_level_hamiltonian(2.0 * omega0 * std::cos(omega * t),
                                 2.0 * omega0 * std::sin(omega * t), -omega0);
  };
  return op;
}

TimeDependentOperator rap_h0(double delta0, double total_time, double omega0) {
  TimeDependentOperator op;
  op.dim = 2;
  op.evaluate = [delta0, total_time, omega0](double t) {
    const double phase = std::numbers::pi * t / total_time;
    return two_level_hamiltonian(omega0 * std::sin(phase), 0.0,
                                 -delta0 * std::cos(phase));
  };
  return op;
}

TimeDependentOperator rap_noise_h1(RapNoise variant, double delta0,
                                   double total_time, double c,
                                   double omega0) {
  switch (variant) {
    case RapNoise::same_as_h0:
      return rap_h0(delta0, total_time, omega0);
    case RapNoise::frequency_error: {
      TimeDependentOperator op;
      op.dim = 2;
      op.time_independent = true;
      op.evaluate = [omega0](double) {
        return two_level_hamiltonian(0.0, 0.0, omega0);
      };
      return op;
    }
    case RapNoise::timing_frequency: {
      TimeDependentOperator op;
      op.dim = 2;
      op.evaluate = [delta0, total_time, c, omega0](double t) {
        const double phase = std::numbers::pi * t / total_time;
        return two_level_hamiltonian(omega0 * std::sin(phase), 0.0,
                                     -delta0 * std::cos(phase) + c * omega0);
      };
      return op;
    }
  }
  throw std::invalid_argument("rap_noise_h1: unknown variant");
}

namespace {

double stirap_envelope(double x, double total_time) {
  const double z = x / total_time;
  return std::exp(-z * z / 0.02);
}

}  // namespace

double stirap_pulse_12(double t, double total_time, double tau, double omega0) {
  return omega0 * stirap_envelope(t - total_time * (0.5 + tau), total_time);
}

double stirap_pulse_23(double t, double total_time, double tau, double omega0) {
  return omega0 * stirap_envelope(t - total_time * (0.5 - tau), total_time);
}

TimeDependentOperator stirap_h0(double total_time, double tau, double omega0) {
  TimeDependentOperator op;
  op.dim = 3;
  op.evaluate = [total_time, tau, omega0](double t) {
    const double w12 = stirap_pulse_12(t, total_time, tau, omega0);
    const double w23 = stirap_pulse_23(t, total_time, tau, omega0);
    Matrix h = Matrix::Zero(3, 3);
    h(0, 1) = w12 / 2.0;
    h(1, 0) = w12 / 2.0;
    h(1, 2) = w23 / 2.0;
    h(2, 1) = w23 / 2.0;
    return h;
  };
  return op;
}

TimeDependentOperator stirap_noise_h1(StirapNoise variant, double total_time,
                                      double tau, double omega0) {
  switch (variant) {
    case StirapNoise::same_as_h0:
      return stirap_h0(total_time, tau, omega0);
    case StirapNoise::phase_fluctuation: {
      TimeDependentOperator op;
      op.dim = 3;
      op.evaluate = [total_time, tau, omega0](double t) {
        const double w23 = stirap_pulse_23(t, total_time, tau, omega0);
        Matrix h = Matrix::Zero(3, 3);
        h(1, 2) = Complex(0.0, w23 / 2.0);
        h(2, 1) = Complex(0.0, -w23 / 2.0);
        return h;
      };
      return op;
    }
  }
  throw std::invalid_argument("stirap_noise_h1: unknown variant");
}

// --------------------------- config vocabulary -------------------------------

void SchemeConfig::validate() const {
  if (id != "phase" && id != "rap" && id != "stirap") {
    throw std::invalid_argument("scheme.id: must be phase, rap or stirap (got '" +
                                id + "')");
  }
  if (!(omega0 > 0.0)) throw std::invalid_argument("scheme.omega0: must be > 0");
  if (!(total_time > 0.0)) throw std::invalid_argument("scheme.T: must be > 0");
  if (id == "phase" && !(omega >= 0.0)) {
    throw std::invalid_argument("scheme.omega: must be >= 0");
  }
  if (id == "rap" && !(delta0 >= 0.0)) {
    throw std::invalid_argument("scheme.delta0: must be >= 0");
  }
  if (id == "stirap" && !(tau > 0.0 && tau < 0.5)) {
    throw std::invalid_argument("scheme.tau: must lie in (0, 1/2)");
  }
  if (id == "stirap") {
    if (h1_variant != "same_as_h0" && h1_variant != "phase_fluctuation") {
      throw std::invalid_argument(
          "scheme.h1: stirap supports same_as_h0 or phase_fluctuation (got '" +
          h1_variant + "')");
    }
  } else if (id == "rap") {
    if (h1_variant != "same_as_h0" && h1_variant != "frequency_error" &&
        h1_variant != "timing_frequency") {
      throw std::invalid_argument(
          "scheme.h1: rap supports same_as_h0, frequency_error or "
          "timing_frequency (got '" +
          h1_variant + "')");
    }
  } else if (h1_variant != "same_as_h0") {
    throw std::invalid_argument("scheme.h1: phase scheme supports same_as_h0");
  }
}

SchemeOperators make_operators(const SchemeConfig& config) {
  config.validate();
  SchemeOperators ops;
  if (config.id == "phase") {
    ops.h0 = phase_changing_h0(config.omega, config.omega0);
    ops.h1 = ops.h0;
    ops.target_label = kPhaseTargetLabel;
  } else if (config.id == "rap") {
    ops.h0 = rap_h0(config.delta0, config.total_time, config.omega0);
    RapNoise variant = RapNoise::same_as_h0;
    if (config.h1_variant == "frequency_error") {
      variant = RapNoise::frequency_error;
    } else if (config.h1_variant == "timing_frequency") {
      variant = RapNoise::timing_frequency;
    }
    ops.h1 = rap_noise_h1(variant, config.delta0, config.total_time, config.c,
                          config.omega0);
    ops.target_label = kRapTargetLabel;
  } else {
    ops.h0 = stirap_h0(config.total_time, config.tau, config.omega0);
    ops.h1 = config.h1_variant == "phase_fluctuation"
                 ? stirap_noise_h1(StirapNoise::phase_fluctuation,
                                   config.total_time, config.tau, config.omega0)
                 : stirap_h0(config.total_time, config.tau, config.omega0);
    ops.target_label = kStirapTargetLabel;
  }
  return ops;
}

}  // namespace poissonq::schemes
