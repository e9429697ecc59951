#include "omx2d/model.hpp"

#include <cmath>
#include <string>

#include "omx2d/errors.hpp"

namespace omx2d {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::invalid_parameter, std::string(name) + " must be positive and finite");
  }
}

void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::invalid_parameter, std::string(name) + " must be finite");
  }
}

}  // namespace

void SystemParams::validate() const {
  require_positive(omega_b, "omega_b");
  require_positive(omega_c, "omega_c");
  require_positive(kappa_a, "kappa_a");
  require_positive(kappa_b, "kappa_b");
  require_positive(kappa_c, "kappa_c");
  require_finite(omega_a, "omega_a");
  require_finite(g, "g");
  require_finite(lambda, "lambda");
  require_finite(detuning, "Delta");
  require_finite(drive.real(), "Omega");
  require_finite(drive.imag(), "Omega");
  require_finite(probe_amplitude, "probe_amp");
  require_finite(probe_detuning, "Delta_p");
  if (const auto* t = std::get_if<Temperature>(&thermal)) {
    if (!(t->kelvin >= 0.0)) throw Error(ErrorKind::invalid_parameter, "temperature must be >= 0");
  } else {
    const auto& n = std::get<Occupancies>(thermal);
    if (!(n.photon >= 0.0) || !(n.nanobeam >= 0.0) || !(n.graphene >= 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "thermal occupancies must be >= 0");
    }
  }
}

Occupancies SystemParams::occupancies() const {
  if (const auto* t = std::get_if<Temperature>(&thermal)) {
    return {0.0, thermal_occupancy(omega_b, t->kelvin), thermal_occupancy(omega_c, t->kelvin)};
  }
  return std::get<Occupancies>(thermal);
}

SystemParams SystemParams::with_mechanics_swapped() const {
  SystemParams s = *this;
  std::swap(s.omega_b, s.omega_c);
  std::swap(s.kappa_b, s.kappa_c);
  std::swap(s.g, s.lambda);
  if (auto* n = std::get_if<Occupancies>(&s.thermal)) std::swap(n->nanobeam, n->graphene);
  return s;
}

KerrCoefficients kerr(const SystemParams& params) {
  if (params.omega_b == 0.0 || params.omega_c == 0.0) {
    throw Error(ErrorKind::invalid_parameter, "kerr: mechanical frequencies must be nonzero");
  }
  KerrCoefficients k;
  k.chi_b = params.g * params.g / params.omega_b;
  k.chi_c = params.lambda * params.lambda / params.omega_c;
  k.chi_t = k.chi_b + k.chi_c;
  return k;
}

double energy_level(int n_a, int n_b, int n_c, const SystemParams& params) {
  const double chi_t = kerr(params).chi_t;
  const double na = n_a;
  return params.omega_a * na - chi_t * na * na + params.omega_b * n_b + params.omega_c * n_c;
}

int degeneracy(int phonons_total) {
  if (phonons_total < 0) throw Error(ErrorKind::invalid_parameter, "degeneracy: negative phonon count");
  return phonons_total + 1;
}

double thermal_occupancy(double omega, double kelvin) {
  if (!(omega > 0.0)) throw Error(ErrorKind::invalid_parameter, "thermal_occupancy: omega must be > 0");
  if (kelvin < 0.0) throw Error(ErrorKind::invalid_parameter, "thermal_occupancy: T must be >= 0");
  if (kelvin == 0.0) return 0.0;
  const double x = hbar * omega / (k_boltzmann * kelvin);
  return 1.0 / std::expm1(x);
}

OperatorMatrix hamiltonian_rotating(const SystemParams& params, const HilbertDims& dims) {
  dims.validate();
  const auto a = mode_lowering(Mode::photon, dims);
  const auto b = mode_lowering(Mode::nanobeam, dims);
  const auto c = mode_lowering(Mode::graphene, dims);
  const auto ad = adjoint(a);
  const auto n_a = ad * a;
  const Complex i{0.0, 1.0};

  OperatorMatrix h = (-params.detuning) * n_a;
  h += params.omega_b * (adjoint(b) * b);
  h += params.omega_c * (adjoint(c) * c);
  h += params.g * (n_a * (adjoint(b) + b));
  h += params.lambda * (n_a * (adjoint(c) + c));
  h += i * (params.drive * ad - std::conj(params.drive) * a);
  return h;
}

}  // namespace omx2d
