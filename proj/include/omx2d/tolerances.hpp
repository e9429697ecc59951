#pragma once

namespace omx2d {

/// Numerical thresholds shared by every module. One record so that a run's
/// metadata can echo exactly what was enforced.
struct Tolerances {
  double hermiticity = 1e-10;     // max |rho - rho^dagger|
  double trace = 1e-10;           // |Tr rho - 1|
  double positivity = 1e-8;       // smallest admissible eigenvalue is -positivity
  double residual = 1e-9;         // ||L rho||_inf relative to ||L||_inf
  double photon_number_floor = 1e-12;  // below this g2 is undefined
  double operator_hermiticity = 1e-12;  // relative check on Hamiltonians
  double mean_field_residual = 1e-10;   // relative to |Omega|
  double spectrum_floor = 1e-12;        // admissible negative spectrum value
};

}  // namespace omx2d
