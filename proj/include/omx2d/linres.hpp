#pragma once

#include <optional>
#include <vector>

#include "omx2d/model.hpp"
#include "omx2d/quadrature.hpp"
#include "omx2d/scan_table.hpp"

namespace omx2d {

enum class SelfEnergyForm {
  /// Sigma = -i |G|^2 (Gamma_a(w) - Gamma_a(-w)^*)
  standard,
  /// the same expression with the inverse responses Gamma_a^-1, kept for comparison
  as_printed,
};

const char* to_string(SelfEnergyForm form);

/// Linearized three-mode problem around a strong drive. All rates in rad/s.
struct LinearizedParams {
  Complex G;                    // g alpha
  double coupling_ratio = 0.0;  // eps = lambda / g = K / G
  double detuning = 0.0;
  double omega_b = 0.0, omega_c = 0.0;
  double kappa_a = 0.0, kappa_b = 0.0, kappa_c = 0.0;
  Occupancies occupancies;
  std::optional<Complex> alpha;  // set when derived from a drive
  SelfEnergyForm form = SelfEnergyForm::standard;

  Complex K() const { return coupling_ratio * G; }
  void validate() const;

  /// alpha = Omega / (kappa_a/2 - i Delta), G = g alpha, eps = lambda / g.
  static LinearizedParams from_system(const SystemParams& params);
  /// Same, but with |G| given directly (G real and positive).
  static LinearizedParams from_system(const SystemParams& params, double coupling_G);

  /// b <-> c relabeling: G -> K, eps -> 1/eps. Needs eps != 0.
  LinearizedParams with_modes_swapped() const;
};

struct ResponseFunctions {
  Complex a, b, c;
};

/// Gamma_a = 1/(kappa_a/2 - i(w + Delta)), Gamma_b = 1/(kappa_b/2 + i(omega_b - w)), Gamma_c alike.
ResponseFunctions response_functions(const LinearizedParams& p, double omega);

/// Sigma(w) in the form selected by p.form.
Complex self_energy(const LinearizedParams& p, double omega);
Complex self_energy(const LinearizedParams& p, double omega, SelfEnergyForm form);

/// Sigma_c(w) = 1 + 2 omega_c eps^2 Sigma(w) / ((kappa_c/2 - i w)^2 + omega_c^2).
Complex amplification_factor(const LinearizedParams& p, double omega);

/// eta(w) = Gamma_c(w) Gamma_c(-w)^* / (Gamma_b(w) Gamma_b(-w)^*).
Complex eta(const LinearizedParams& p, double omega);

/// N(w) = Gamma_b^-1(w) Gamma_b^-1(-w)^* Sigma_c(w) + 2 omega_b Sigma(w).
Complex n_factor(const LinearizedParams& p, double omega);
/// N(w) ~ Gamma_b^-1(w) Gamma_b^-1(-w)^* + 2 omega_b (eps^2 eta(w) + 1) Sigma(w).
Complex n_factor_approx(const LinearizedParams& p, double omega);

struct SpectrumPoint {
  double total = 0.0;
  double opt = 0.0;   // optical noise term over |N|^2
  double th_b = 0.0;  // nanobeam thermal term over |N|^2
  double th_c = 0.0;  // graphene thermal term over |N|^2
};

/// Closed form of S_bb(w) = [kappa_a |G|^2 |Gamma_b^-1|^2 ((n_a+1)|Gamma_a(w)|^2 + n_a |Gamma_a(-w)|^2)
///   + kappa_b sigma_b + kappa_c sigma_c] / |N|^2. Uses p.form for Sigma.
SpectrumPoint sbb_closed(const LinearizedParams& p, double omega);

/// S_bb(w) from a direct solve of the 6x6 frequency-domain Langevin system
/// over (d, d^dag, b, b^dag, c, c^dag) contracted with the input-noise
/// correlators. Independent of p.form. Throws DivergenceError if singular.
double sbb_langevin(const LinearizedParams& p, double omega);

struct Stability {
  bool stable = true;             // effective damping of both modes > 0
  double kappa_b_eff = 0.0, kappa_c_eff = 0.0;
  double drift_max_real = 0.0;    // largest Re eigenvalue of the time-domain drift matrix
  bool drift_stable = true;
};

struct BackactionResult {
  double delta_omega_b = 0.0, gamma_b_opt = 0.0;
  double delta_omega_c = 0.0, gamma_c_opt = 0.0;
  double omega_b_eff = 0.0, kappa_b_eff = 0.0;
  double omega_c_eff = 0.0, kappa_c_eff = 0.0;
  bool weak_coupling = true;  // kappa_b, kappa_c, 4|G|^2/kappa_a all below kappa_a / 10
};

/// Sigma_e(w) = (eps^2 eta(w) + 1) Sigma(w); shifts are Re Sigma_e and -2 Im Sigma_e at
/// omega_b. The graphene values come from the relabeled problem evaluated at omega_c.
BackactionResult backaction(const LinearizedParams& p);

/// Effective-damping criterion plus the drift-matrix eigenvalue check.
Stability stability(const LinearizedParams& p);

/// Eigenvalues of the 6x6 drift matrix of the linearized equations.
std::vector<Complex> drift_eigenvalues(const LinearizedParams& p);

struct PhononNumberOptions {
  QuadratureOptions quadrature;
  /// Inner integration window W = max(minimum_half_width, 5 max(omega_b, omega_c, |Delta|) + 10 kappa_a).
  double minimum_half_width = 0.0;
};

struct PhononNumber {
  double n_m = 0.0;
  double error = 0.0;
  int panels = 0;
  long evaluations = 0;
};

/// n_m = integral of S_bb dw / 2 pi over the real line, using sbb_langevin.
/// Throws DivergenceError when the effective-damping criterion fails.
PhononNumber phonon_number(const LinearizedParams& p, const PhononNumberOptions& options = {});

/// Breakpoints used by phonon_number: resonance ladders around +-omega_b,
/// +-omega_c and the drift-matrix poles.
std::vector<double> spectrum_breakpoints(const LinearizedParams& p, double half_width);

/// Sampled spectrum. Columns omega/2pi_Hz, s_bb, s_opt, s_th_b, s_th_c, s_bb_langevin.
ScanTable spectrum(const LinearizedParams& p, const std::vector<double>& omegas, int workers = 1);

}  // namespace omx2d
