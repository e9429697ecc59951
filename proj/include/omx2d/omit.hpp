#pragma once

#include <vector>

#include "omx2d/model.hpp"
#include "omx2d/scan_table.hpp"
#include "omx2d/tolerances.hpp"

namespace omx2d {

/// Classical steady state of the driven cavity and both mechanical modes.
struct MeanFields {
  Complex A0, B0, C0;
  double n_cav = 0.0;             // |A0|^2
  std::vector<double> roots;      // every admissible |A0|^2, ascending
  bool bistable = false;          // more than one admissible root
  double residual = 0.0;          // |A0 - Omega / Q| / |Omega|
};

/// Solves the mean-field cubic in x = |A0|^2,
///   s^2 x^3 + 2 Delta s x^2 + ((kappa_a/2)^2 + Delta^2) x - |Omega|^2 = 0,
///   s = 2 g^2 omega_b / (omega_b^2 + kappa_b^2/4) + 2 lambda^2 omega_c / (omega_c^2 + kappa_c^2/4),
/// and keeps the smallest root (the branch reached by ramping the drive up from zero).
MeanFields mean_field_steady(const SystemParams& params, const Tolerances& tol = {});

/// Q = kappa_a/2 - i Delta + 2 i g Re B0 + 2 i lambda Re C0.
Complex cavity_factor(const SystemParams& params, const MeanFields& fields);

/// P = sum_i theta_i omega_i / ((kappa_i/2 - i Delta_p)^2 + omega_i^2), theta = (g, lambda).
Complex coupling_factor(const SystemParams& params, double probe_detuning);

enum class ProbeFormula {
  /// The closed form with Q in the inner denominator and the coupling g P.
  as_printed,
  /// First-order expansion of the mean-field equations: Q^* in the inner
  /// denominator and the coupling sum_i theta_i^2 omega_i / (...).
  derived,
};

struct ProbeResponse {
  Complex A_minus, A_plus;
  Complex P, Q;
  Complex coupling;  // the quantity multiplying 2 i |A0|^2 in the response
  double mu_p = 0.0;  // 2 kappa_a Re(A_-) / eps
  double nu_p = 0.0;  // 2 kappa_a Im(A_-) / eps
};

/// First-order probe response at params.probe_detuning. Solves the 2x2
/// system for (A_-, A_+^*) directly; the closed form of the same system is
/// `probe_response_closed`.
ProbeResponse probe_response(const SystemParams& params, const MeanFields& fields,
                             ProbeFormula formula = ProbeFormula::as_printed);

/// A_- from the printed continued fraction
///   eps / (Q - i Dp - 2igP x - 4 g^2 P^2 x^2 / (Q~ - i Dp + 2igP x)).
Complex probe_response_closed(const SystemParams& params, const MeanFields& fields,
                              ProbeFormula formula = ProbeFormula::as_printed);

struct OmitScanOptions {
  ProbeFormula formula = ProbeFormula::as_printed;
  int workers = 1;
};

/// Columns Delta_p/2pi_Hz, mu_p, nu_p, re_A_minus, im_A_minus over the probe
/// detunings (rad/s, sorted ascending).
ScanTable omit_scan(const SystemParams& params, const std::vector<double>& probe_detunings,
                    const OmitScanOptions& options = {});

const char* to_string(ProbeFormula formula);

}  // namespace omx2d
