// schemes.hpp — Control protocols and noise Hamiltonians as parameterized
// time-dependent operator factories: the two-level phase-changing drive, the
// RAP population-inversion sweep with its noise variants, and the three-level
// STIRAP pulse pair.

#pragma once

#include "poissonq/qcore.hpp"

#include <string>

namespace poissonq::schemes {

using qcore::Matrix;
using qcore::TimeDependentOperator;

// Ascending-order eigenvalue index of the followed eigenstate.
inline constexpr int kPhaseTargetLabel = 1;   // phi_+ of a two-level system
inline constexpr int kRapTargetLabel = 1;     // phi_+ of a two-level system
inline constexpr int kStirapTargetLabel = 1;  // the zero-eigenvalue dark state

// H = (1/2) [[-Delta, Omega_R - i Omega_I], [Omega_R + i Omega_I, Delta]]
Matrix two_level_hamiltonian(double omega_r, double omega_i, double delta);

// Omega_R = 2 Omega0 cos(Omega t), Omega_I = 2 Omega0 sin(Omega t),
// Delta = -Omega0. Changes only the relative phase of the followed state.
TimeDependentOperator phase_changing_h0(double omega, double omega0 = 1.0);

// Omega_R = Omega0 sin(pi t / T), Delta = -delta0 cos(pi t / T).
TimeDependentOperator rap_h0(double delta0, double total_time,
                             double omega0 = 1.0);

enum class RapNoise { same_as_h0, frequency_error, timing_frequency };

TimeDependentOperator rap_noise_h1(RapNoise variant, double delta0,
                                   double total_time, double c = 0.0,
                                   double omega0 = 1.0);

// Counter-intuitive STIRAP pulse pair with g(x) = exp[-(x/T)^2 / 0.02]:
// Omega_12 peaks at T(1/2 + tau), Omega_23 at T(1/2 - tau).
double stirap_pulse_12(double t, double total_time, double tau,
                       double omega0 = 1.0);
double stirap_pulse_23(double t, double total_time, double tau,
                       double omega0 = 1.0);

TimeDependentOperator stirap_h0(double total_time, double tau,
                                double omega0 = 1.0);

enum class StirapNoise { same_as_h0, phase_fluctuation };

TimeDependentOperator stirap_noise_h1(StirapNoise variant, double total_time,
                                      double tau, double omega0 = 1.0);

// --------------------------- config vocabulary -------------------------------

struct SchemeConfig {
  std::string id;  // "phase" | "rap" | "stirap"
  double omega0 = 1.0;
  double omega = 0.4;        // phase drive frequency
  double delta0 = 1.0;       // RAP detuning amplitude
  double total_time = 20.0;  // T
  double tau = 0.1;          // STIRAP delay fraction of T
  double c = 0.0;            // timing_frequency coupling constant
  std::string h1_variant = "same_as_h0";

  void validate() const;  // throws std::invalid_argument naming the field
};

struct SchemeOperators {
  TimeDependentOperator h0;
  TimeDependentOperator h1;
  int target_label = 0;
};

SchemeOperators make_operators(const SchemeConfig& config);

}  // namespace poissonq::schemes
