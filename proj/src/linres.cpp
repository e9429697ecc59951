#include "omx2d/linres.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "omx2d/errors.hpp"
#include "omx2d/sweep.hpp"

namespace omx2d {

namespace {

constexpr Complex I{0.0, 1.0};
using Matrix6 = Eigen::Matrix<Complex, 6, 6>;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::invalid_parameter, std::string(name) + " must be positive and finite");
  }
}

// Time-domain drift matrix over (d, d^dag, b, b^dag, c, c^dag): du/dt = A u + noise.
Matrix6 drift_matrix(const LinearizedParams& p) {
  const Complex G = p.G, K = p.K(), Gc = std::conj(G), Kc = std::conj(K);
  Matrix6 a = Matrix6::Zero();
  a(0, 0) = I * p.detuning - 0.5 * p.kappa_a;
  a(0, 2) = a(0, 3) = -I * G;
  a(0, 4) = a(0, 5) = -I * K;
  a(1, 1) = -I * p.detuning - 0.5 * p.kappa_a;
  a(1, 2) = a(1, 3) = I * Gc;
  a(1, 4) = a(1, 5) = I * Kc;
  a(2, 2) = -I * p.omega_b - 0.5 * p.kappa_b;
  a(2, 0) = -I * Gc;
  a(2, 1) = -I * G;
  a(3, 3) = I * p.omega_b - 0.5 * p.kappa_b;
  a(3, 0) = I * Gc;
  a(3, 1) = I * G;
  a(4, 4) = -I * p.omega_c - 0.5 * p.kappa_c;
  a(4, 0) = -I * Kc;
  a(4, 1) = -I * K;
  a(5, 5) = I * p.omega_c - 0.5 * p.kappa_c;
  a(5, 0) = I * Kc;
  a(5, 1) = I * K;
  return a;
}

std::string omega_label(double w) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "omega/2pi=%.9g Hz", ordinary(w));
  return buf;
}

}  // namespace

const char* to_string(SelfEnergyForm form) {
  return form == SelfEnergyForm::standard ? "standard" : "as_printed";
}

// ---- parameters ---------------------------------------------------------------

void LinearizedParams::validate() const {
  require_positive(omega_b, "omega_b");
  require_positive(omega_c, "omega_c");
  require_positive(kappa_a, "kappa_a");
  require_positive(kappa_b, "kappa_b");
  require_positive(kappa_c, "kappa_c");
  if (!std::isfinite(detuning)) throw Error(ErrorKind::invalid_parameter, "Delta must be finite");
  if (!std::isfinite(std::abs(G))) throw Error(ErrorKind::invalid_parameter, "G must be finite");
  if (!std::isfinite(coupling_ratio)) throw Error(ErrorKind::invalid_parameter, "coupling_ratio must be finite");
  if (!(occupancies.photon >= 0.0) || !(occupancies.nanobeam >= 0.0) || !(occupancies.graphene >= 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "thermal occupancies must be >= 0");
  }
}

namespace {

LinearizedParams base_from(const SystemParams& s) {
  s.validate();
  LinearizedParams p;
  p.detuning = s.detuning;
  p.omega_b = s.omega_b;
  p.omega_c = s.omega_c;
  p.kappa_a = s.kappa_a;
  p.kappa_b = s.kappa_b;
  p.kappa_c = s.kappa_c;
  p.occupancies = s.occupancies();
  if (s.g != 0.0) {
    p.coupling_ratio = s.lambda / s.g;
  } else if (s.lambda != 0.0) {
    throw Error(ErrorKind::invalid_parameter, "coupling_ratio = lambda/g is undefined for g = 0 and lambda != 0");
  }
  return p;
}

}  // namespace

LinearizedParams LinearizedParams::from_system(const SystemParams& s) {
  LinearizedParams p = base_from(s);
  const Complex alpha = s.drive / Complex(0.5 * s.kappa_a, -s.detuning);
  p.alpha = alpha;
  p.G = s.g * alpha;
  return p;
}

LinearizedParams LinearizedParams::from_system(const SystemParams& s, double coupling_G) {
  if (!(coupling_G >= 0.0)) throw Error(ErrorKind::invalid_parameter, "|G| must be >= 0");
  LinearizedParams p = base_from(s);
  p.G = coupling_G;
  return p;
}

LinearizedParams LinearizedParams::with_modes_swapped() const {
  if (coupling_ratio == 0.0) {
    throw Error(ErrorKind::invalid_parameter, "with_modes_swapped: coupling_ratio must be nonzero");
  }
  LinearizedParams p = *this;
  p.G = K();
  p.coupling_ratio = 1.0 / coupling_ratio;
  std::swap(p.omega_b, p.omega_c);
  std::swap(p.kappa_b, p.kappa_c);
  std::swap(p.occupancies.nanobeam, p.occupancies.graphene);
  p.alpha.reset();
  return p;
}

// ---- response functions --------------------------------------------------------

ResponseFunctions response_functions(const LinearizedParams& p, double w) {
  return {1.0 / Complex(0.5 * p.kappa_a, -(w + p.detuning)), 1.0 / Complex(0.5 * p.kappa_b, p.omega_b - w),
          1.0 / Complex(0.5 * p.kappa_c, p.omega_c - w)};
}

Complex self_energy(const LinearizedParams& p, double w) { return self_energy(p, w, p.form); }

Complex self_energy(const LinearizedParams& p, double w, SelfEnergyForm form) {
  const double g2 = std::norm(p.G);
  const Complex plus = response_functions(p, w).a;
  const Complex minus = response_functions(p, -w).a;
  if (form == SelfEnergyForm::standard) return -I * g2 * (plus - std::conj(minus));
  return -I * g2 * (1.0 / plus - std::conj(1.0 / minus));
}

Complex amplification_factor(const LinearizedParams& p, double w) {
  const double e2 = p.coupling_ratio * p.coupling_ratio;
  const Complex z = Complex(0.5 * p.kappa_c, -w);
  return 1.0 + 2.0 * p.omega_c * e2 * self_energy(p, w) / (z * z + p.omega_c * p.omega_c);
}

Complex eta(const LinearizedParams& p, double w) {
  const auto plus = response_functions(p, w);
  const auto minus = response_functions(p, -w);
  return plus.c * std::conj(minus.c) / (plus.b * std::conj(minus.b));
}

Complex n_factor(const LinearizedParams& p, double w) {
  const Complex ib = 1.0 / response_functions(p, w).b;
  const Complex ib_minus = 1.0 / response_functions(p, -w).b;
  return ib * std::conj(ib_minus) * amplification_factor(p, w) + 2.0 * p.omega_b * self_energy(p, w);
}

Complex n_factor_approx(const LinearizedParams& p, double w) {
  const Complex ib = 1.0 / response_functions(p, w).b;
  const Complex ib_minus = 1.0 / response_functions(p, -w).b;
  const double e2 = p.coupling_ratio * p.coupling_ratio;
  return ib * std::conj(ib_minus) + 2.0 * p.omega_b * (e2 * eta(p, w) + 1.0) * self_energy(p, w);
}

// ---- spectra -----------------------------------------------------------------------

SpectrumPoint sbb_closed(const LinearizedParams& p, double w) {
  const auto plus = response_functions(p, w);
  const auto minus = response_functions(p, -w);
  const Complex sigma = self_energy(p, w);
  const Complex sigma_c = amplification_factor(p, w);
  const Complex ib = 1.0 / plus.b;
  const double ib2 = std::norm(ib);
  const double e2 = p.coupling_ratio * p.coupling_ratio;
  const Occupancies& n = p.occupancies;

  const Complex N = n_factor(p, w);
  const double n2 = std::norm(N);
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw DivergenceError("sbb_closed: N vanishes at " + omega_label(w), w);
  }
  const double opt = p.kappa_a * std::norm(p.G) * ib2 *
                     ((n.photon + 1.0) * std::norm(plus.a) + n.photon * std::norm(minus.a));
  const double sig_b = n.nanobeam * std::norm(ib * sigma_c + I * sigma) + (n.nanobeam + 1.0) * std::norm(sigma);
  const double sig_c = e2 * ib2 * std::norm(sigma) *
                       ((n.graphene + 1.0) * std::norm(plus.c) + n.graphene * std::norm(minus.c));
  SpectrumPoint s;
  s.opt = opt / n2;
  s.th_b = p.kappa_b * sig_b / n2;
  s.th_c = p.kappa_c * sig_c / n2;
  s.total = s.opt + s.th_b + s.th_c;
  return s;
}

double sbb_langevin(const LinearizedParams& p, double w) {
  // M(v) u(v) = diag(sqrt kappa) noise(v) with M(v) = -(A + i v); b(w) needs row 2 of M^-1 at v = -w
  const double v = -w;
  Matrix6 m = -drift_matrix(p);
  for (int k = 0; k < 6; ++k) m(k, k) -= I * v;
  Eigen::PartialPivLU<Matrix6> lu(m);
  Eigen::Matrix<Complex, 6, 1> e = Eigen::Matrix<Complex, 6, 1>::Zero();
  e(2) = 1.0;
  const Eigen::Matrix<Complex, 6, 1> row = lu.transpose().solve(e);
  const double rc = lu.rcond();
  if (!(rc > 1e-15) || !row.allFinite()) {
    throw DivergenceError("sbb_langevin: singular response at " + omega_label(w), w);
  }
  const double k[3] = {p.kappa_a, p.kappa_b, p.kappa_c};
  const double occ[3] = {p.occupancies.photon, p.occupancies.nanobeam, p.occupancies.graphene};
  double s = 0.0;
  for (int o = 0; o < 3; ++o) {
    s += k[o] * (occ[o] * std::norm(row(2 * o)) + (occ[o] + 1.0) * std::norm(row(2 * o + 1)));
  }
  return s;
}

// ---- backaction and stability -----------------------------------------------------------

BackactionResult backaction(const LinearizedParams& p) {
  p.validate();
  const double e2 = p.coupling_ratio * p.coupling_ratio;
  BackactionResult r;

  const Complex sigma_b = (e2 * eta(p, p.omega_b) + 1.0) * self_energy(p, p.omega_b);
  // graphene: relabeled problem, written so that eps = 0 needs no division
  const auto plus = response_functions(p, p.omega_c);
  const auto minus = response_functions(p, -p.omega_c);
  const Complex eta_swapped = plus.b * std::conj(minus.b) / (plus.c * std::conj(minus.c));
  const Complex sigma_c = (eta_swapped + e2) * self_energy(p, p.omega_c);

  r.delta_omega_b = sigma_b.real();
  r.gamma_b_opt = -2.0 * sigma_b.imag();
  r.delta_omega_c = e2 == 0.0 ? 0.0 : sigma_c.real();
  r.gamma_c_opt = e2 == 0.0 ? 0.0 : -2.0 * sigma_c.imag();
  r.omega_b_eff = p.omega_b + r.delta_omega_b;
  r.kappa_b_eff = p.kappa_b + r.gamma_b_opt;
  r.omega_c_eff = p.omega_c + r.delta_omega_c;
  r.kappa_c_eff = p.kappa_c + r.gamma_c_opt;

  const double gate = 0.1 * p.kappa_a;
  r.weak_coupling = p.kappa_b < gate && p.kappa_c < gate && 4.0 * std::norm(p.G) / p.kappa_a < gate;
  return r;
}

std::vector<Complex> drift_eigenvalues(const LinearizedParams& p) {
  Eigen::ComplexEigenSolver<Matrix6> es(drift_matrix(p), false);
  std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + 6);
  std::sort(out.begin(), out.end(), [](Complex a, Complex b) {
    return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real();
  });
  return out;
}

Stability stability(const LinearizedParams& p) {
  const BackactionResult b = backaction(p);
  Stability s;
  s.kappa_b_eff = b.kappa_b_eff;
  s.kappa_c_eff = b.kappa_c_eff;
  s.stable = b.kappa_b_eff > 0.0 && b.kappa_c_eff > 0.0;
  s.drift_max_real = -std::numeric_limits<double>::infinity();
  for (Complex l : drift_eigenvalues(p)) s.drift_max_real = std::max(s.drift_max_real, l.real());
  s.drift_stable = s.drift_max_real < 0.0;
  return s;
}

// ---- cooling ------------------------------------------------------------------------------

std::vector<double> spectrum_breakpoints(const LinearizedParams& p, double half_width) {
  std::vector<double> out;
  auto ladder = [&](double center, double width) {
    if (!(width > 0.0)) return;
    out.push_back(center);
    for (double d = 0.5 * width; d < 2.0 * half_width; d *= 4.0) {
      out.push_back(center - d);
      out.push_back(center + d);
    }
  };
  for (double c : {p.omega_b, p.omega_c}) {
    ladder(c, p.kappa_c);
    ladder(-c, p.kappa_c);
  }
  for (Complex l : drift_eigenvalues(p)) {
    ladder(l.imag(), std::abs(l.real()));
    ladder(-l.imag(), std::abs(l.real()));
  }
  out.erase(std::remove_if(out.begin(), out.end(), [&](double x) { return !(std::abs(x) < half_width); }), out.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PhononNumber phonon_number(const LinearizedParams& p, const PhononNumberOptions& options) {
  p.validate();
  const Stability st = stability(p);
  if (!st.stable) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "phonon_number: unstable, effective damping b %.4g, c %.4g (x 2pi Hz)",
                  ordinary(st.kappa_b_eff), ordinary(st.kappa_c_eff));
    throw DivergenceError(buf, p.omega_b);
  }
  double pole = 0.0;
  for (Complex l : drift_eigenvalues(p)) pole = std::max(pole, std::abs(l));
  const double w = std::max({options.minimum_half_width,
                             5.0 * std::max({p.omega_b, p.omega_c, std::abs(p.detuning)}) + 10.0 * p.kappa_a,
                             3.0 * pole});
  const auto breaks = spectrum_breakpoints(p, w);
  const auto q = integrate_real_line([&p](double x) { return sbb_langevin(p, x) / two_pi; }, w, breaks,
                                     options.quadrature);
  return {q.value, q.error, q.panels, q.evaluations};
}

ScanTable spectrum(const LinearizedParams& p, const std::vector<double>& omegas, int workers) {
  p.validate();
  const std::string w_col = std::string("omega") + hz_suffix;
  ScanTable table({w_col, "s_bb", "s_opt", "s_th_b", "s_th_c", "s_bb_langevin"});
  struct Row {
    SpectrumPoint s;
    double langevin = 0.0;
    std::string error;
  };
  std::vector<Row> rows(omegas.size());
  parallel_for(omegas.size(), workers, [&](std::size_t i) {
    try {
      rows[i].s = sbb_closed(p, omegas[i]);
      rows[i].langevin = sbb_langevin(p, omegas[i]);
    } catch (const Error& e) {
      rows[i].error = e.what();
    }
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].error.empty()) {
      table.add_failed_row({ordinary(omegas[i])}, rows[i].error);
      continue;
    }
    const auto& s = rows[i].s;
    table.add_row({ordinary(omegas[i]), s.total, s.opt, s.th_b, s.th_c, rows[i].langevin});
  }
  const Stability st = stability(p);
  auto& meta = table.metadata();
  meta["self_energy"] = to_string(p.form);
  meta["s_bb_units"] = "s/rad (per unit angular frequency)";
  meta["stable"] = st.stable;
  meta["drift_max_real/2pi_Hz"] = ordinary(st.drift_max_real);
  if (!st.stable) table.warn("effective damping is not positive; spectrum describes no steady state");
  if (!st.drift_stable) {
    table.warn("linearized drift matrix has an eigenvalue with positive real part");
  }
  return table;
}

}  // namespace omx2d
