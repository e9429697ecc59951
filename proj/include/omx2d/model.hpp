#pragma once

#include <complex>
#include <variant>

#include "omx2d/fockspace.hpp"

namespace omx2d {

inline constexpr double two_pi = 6.283185307179586476925286766559;
inline constexpr double hbar = 1.054571817e-34;      // J s (CODATA 2018, exact)
inline constexpr double k_boltzmann = 1.380649e-23;  // J / K (exact)

/// Ordinary frequency nu in Hz -> angular frequency in rad/s.
constexpr double angular(double hz) { return two_pi * hz; }
/// Angular frequency in rad/s -> nu = omega / 2 pi in Hz.
constexpr double ordinary(double rad_s) { return rad_s / two_pi; }

struct Occupancies {
  double photon = 0.0;
  double nanobeam = 0.0;
  double graphene = 0.0;
};

struct Temperature {
  double kelvin = 0.0;
};

/// Thermal environment: a bath temperature (photon occupancy pinned to 0) or
/// explicit per-mode occupancies.
using ThermalSpec = std::variant<Temperature, Occupancies>;

/// All physical rates and frequencies, angular units (rad/s).
///
/// kappa_* are full energy decay rates; they enter amplitude equations as
/// kappa/2. Couplings are real; lambda may be negative.
struct SystemParams {
  double omega_a = 0.0;  // only used by energy_level
  double omega_b = 0.0;
  double omega_c = 0.0;
  double g = 0.0;
  double lambda = 0.0;
  double kappa_a = 0.0;
  double kappa_b = 0.0;
  double kappa_c = 0.0;
  double detuning = 0.0;        // Delta = omega_d - omega_a
  Complex drive{0.0, 0.0};      // Omega
  double probe_amplitude = 0.0;  // epsilon of the probe field
  double probe_detuning = 0.0;   // Delta_p = omega_p - omega_d
  ThermalSpec thermal = Occupancies{};

  /// Throws invalid-parameter on non-positive frequencies or rates.
  void validate() const;
  /// delta = omega_b - omega_c.
  double mechanical_detuning() const { return omega_b - omega_c; }
  /// Occupancies resolved from the thermal spec.
  Occupancies occupancies() const;
  /// (omega_b, kappa_b, g, n_b) <-> (omega_c, kappa_c, lambda, n_c).
  SystemParams with_mechanics_swapped() const;
};

struct KerrCoefficients {
  double chi_b = 0.0;
  double chi_c = 0.0;
  double chi_t = 0.0;
};

/// chi_b = g^2/omega_b, chi_c = lambda^2/omega_c, chi_t = chi_b + chi_c.
KerrCoefficients kerr(const SystemParams& params);

/// Level energy (hbar factored out) of the polaron-frame Hamiltonian:
/// omega_a n_a - chi_t n_a^2 + omega_b n_b + omega_c n_c.
double energy_level(int n_a, int n_b, int n_c, const SystemParams& params);

/// Degeneracy of a level with `phonons_total` phonons when omega_b = omega_c.
int degeneracy(int phonons_total);

/// Bose-Einstein occupancy 1/(exp(hbar omega / k_B T) - 1); 0 at T = 0.
double thermal_occupancy(double omega, double kelvin);

/// Driven Hamiltonian in the frame rotating at the drive (units of hbar):
///   -Delta a^dag a + omega_b b^dag b + omega_c c^dag c
///   + g a^dag a (b^dag + b) + lambda a^dag a (c^dag + c) + i (Omega a^dag - Omega^* a)
OperatorMatrix hamiltonian_rotating(const SystemParams& params, const HilbertDims& dims);

}  // namespace omx2d
