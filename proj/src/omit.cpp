#include "omx2d/omit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "omx2d/errors.hpp"
#include "omx2d/sweep.hpp"

namespace omx2d {

namespace {

constexpr Complex I{0.0, 1.0};

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 (c3 != 0), trigonometric or Cardano form.
std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
  const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  std::vector<double> roots;
  if (r * r < q * q * q) {
    const double theta = std::acos(std::clamp(r / std::sqrt(q * q * q), -1.0, 1.0));
    const double m = -2.0 * std::sqrt(q);
    for (int k = 0; k < 3; ++k) roots.push_back(m * std::cos((theta + two_pi * k) / 3.0) - a / 3.0);
  } else {
    const double big = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q * q * q)), r);
    const double small = big != 0.0 ? q / big : 0.0;
    roots.push_back(big + small - a / 3.0);
  }
  // Newton polish
  for (double& x : roots) {
    for (int it = 0; it < 4; ++it) {
      const double f = ((c3 * x + c2) * x + c1) * x + c0;
      const double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
      if (df == 0.0) break;
      x -= f / df;
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double mechanical_stiffness(double theta, double omega, double kappa) {
  return 2.0 * theta * theta * omega / (omega * omega + 0.25 * kappa * kappa);
}

std::string dp_label(double dp) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "Delta_p/2pi=%.9g Hz", ordinary(dp));
  return buf;
}

}  // namespace

const char* to_string(ProbeFormula formula) {
  return formula == ProbeFormula::as_printed ? "as_printed" : "derived";
}

MeanFields mean_field_steady(const SystemParams& params, const Tolerances& tol) {
  params.validate();
  MeanFields f;
  const double omega2 = std::norm(params.drive);
  if (omega2 == 0.0) {
    f.roots = {0.0};
    return f;
  }
  const double s = mechanical_stiffness(params.g, params.omega_b, params.kappa_b) +
                   mechanical_stiffness(params.lambda, params.omega_c, params.kappa_c);
  const double k2 = 0.25 * params.kappa_a * params.kappa_a;
  const double delta = params.detuning;

  std::vector<double> candidates;
  if (s == 0.0) {
    candidates = {omega2 / (k2 + delta * delta)};
  } else {
    candidates = real_cubic_roots(s * s, 2.0 * delta * s, k2 + delta * delta, -omega2);
  }
  for (double x : candidates) {
    // x (k2 + (Delta + s x)^2) = |Omega|^2 forces x > 0
    if (x > 0.0 && std::isfinite(x)) {
      if (f.roots.empty() || std::abs(x - f.roots.back()) > 1e-12 * x) f.roots.push_back(x);
    }
  }
  if (f.roots.empty()) {
    throw Error(ErrorKind::invalid_parameter, "mean_field_steady: no admissible root for |A0|^2");
  }
  f.bistable = f.roots.size() > 1;

  const double x = f.roots.front();
  f.n_cav = x;
  f.B0 = -I * params.g * x / (I * params.omega_b + 0.5 * params.kappa_b);
  f.C0 = -I * params.lambda * x / (I * params.omega_c + 0.5 * params.kappa_c);
  f.A0 = params.drive / cavity_factor(params, f);
  f.n_cav = std::norm(f.A0);

  // substitute back: mechanical amplitudes from |A0|^2, then A0 again
  MeanFields check = f;
  check.B0 = -I * params.g * f.n_cav / (I * params.omega_b + 0.5 * params.kappa_b);
  check.C0 = -I * params.lambda * f.n_cav / (I * params.omega_c + 0.5 * params.kappa_c);
  f.residual = std::abs(f.A0 - params.drive / cavity_factor(params, check)) / std::sqrt(omega2);
  if (!(f.residual < tol.mean_field_residual)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "mean_field_steady: self-consistency residual %.3e", f.residual);
    throw Error(ErrorKind::invalid_parameter, buf);
  }
  return f;
}

Complex cavity_factor(const SystemParams& params, const MeanFields& fields) {
  return 0.5 * params.kappa_a - I * params.detuning + 2.0 * I * params.g * fields.B0.real() +
         2.0 * I * params.lambda * fields.C0.real();
}

Complex coupling_factor(const SystemParams& params, double dp) {
  auto term = [dp](double theta, double omega, double kappa) {
    const Complex z = 0.5 * kappa - I * dp;
    return theta * omega / (z * z + omega * omega);
  };
  return term(params.g, params.omega_b, params.kappa_b) + term(params.lambda, params.omega_c, params.kappa_c);
}

namespace {

struct ProbeSystem {
  Complex a11, a12, a21, a22;
  Complex P, Q, coupling;
};

ProbeSystem probe_system(const SystemParams& params, const MeanFields& fields, ProbeFormula formula) {
  const double dp = params.probe_detuning;
  ProbeSystem s;
  s.P = coupling_factor(params, dp);
  s.Q = cavity_factor(params, fields);
  Complex q_inner = s.Q;
  if (formula == ProbeFormula::as_printed) {
    s.coupling = params.g * s.P;
  } else {
    auto term = [dp](double theta, double omega, double kappa) {
      const Complex z = 0.5 * kappa - I * dp;
      return theta * theta * omega / (z * z + omega * omega);
    };
    s.coupling = term(params.g, params.omega_b, params.kappa_b) + term(params.lambda, params.omega_c, params.kappa_c);
    q_inner = std::conj(s.Q);
  }
  const double x = std::norm(fields.A0);
  s.a11 = s.Q - I * dp - 2.0 * I * s.coupling * x;
  s.a12 = -2.0 * I * s.coupling * fields.A0 * fields.A0;
  s.a21 = 2.0 * I * s.coupling * std::conj(fields.A0 * fields.A0);
  s.a22 = q_inner - I * dp + 2.0 * I * s.coupling * x;
  return s;
}

void require_nonzero(Complex den, double scale, double dp, const char* what) {
  if (!(std::abs(den) > 1e-14 * scale) || !std::isfinite(std::abs(den))) {
    throw DivergenceError(std::string("probe response: ") + what + " vanishes at " + dp_label(dp), dp);
  }
}

double response_scale(const SystemParams& p) {
  return p.kappa_a + std::abs(p.detuning) + std::abs(p.probe_detuning) + p.omega_b + p.omega_c;
}

}  // namespace

ProbeResponse probe_response(const SystemParams& params, const MeanFields& fields, ProbeFormula formula) {
  params.validate();
  if (params.probe_amplitude == 0.0) {
    throw Error(ErrorKind::invalid_parameter, "probe_response: probe_amp must be nonzero");
  }
  const double dp = params.probe_detuning;
  const ProbeSystem s = probe_system(params, fields, formula);
  const double scale = response_scale(params);
  const Complex det = s.a11 * s.a22 - s.a12 * s.a21;
  require_nonzero(s.a22, scale, dp, "inner denominator");
  require_nonzero(det, scale * scale, dp, "determinant");

  const double eps = params.probe_amplitude;
  ProbeResponse r;
  r.A_minus = eps * s.a22 / det;
  r.A_plus = std::conj(-eps * s.a21 / det);
  r.P = s.P;
  r.Q = s.Q;
  r.coupling = s.coupling;
  r.mu_p = 2.0 * params.kappa_a * r.A_minus.real() / eps;
  r.nu_p = 2.0 * params.kappa_a * r.A_minus.imag() / eps;
  return r;
}

Complex probe_response_closed(const SystemParams& params, const MeanFields& fields, ProbeFormula formula) {
  params.validate();
  const double dp = params.probe_detuning;
  const ProbeSystem s = probe_system(params, fields, formula);
  const double scale = response_scale(params);
  require_nonzero(s.a22, scale, dp, "inner denominator");
  const double x2 = std::norm(fields.A0) * std::norm(fields.A0);
  const Complex den = s.a11 - 4.0 * s.coupling * s.coupling * x2 / s.a22;
  require_nonzero(den, scale, dp, "denominator");
  return params.probe_amplitude / den;
}

ScanTable omit_scan(const SystemParams& params, const std::vector<double>& probe_detunings,
                    const OmitScanOptions& options) {
  params.validate();
  if (!std::is_sorted(probe_detunings.begin(), probe_detunings.end())) {
    throw Error(ErrorKind::invalid_input, "omit_scan: probe detunings must be sorted");
  }
  ScanTable table({std::string("Delta_p") + hz_suffix, "mu_p", "nu_p", "re_A_minus", "im_A_minus"});
  const MeanFields fields = mean_field_steady(params);
  if (std::abs(params.probe_amplitude) > 0.1 * std::abs(params.drive)) {
    table.warn("probe amplitude is not small against the drive; first-order response may not apply");
  }
  if (fields.bistable) table.warn("mean-field equations are bistable; the lowest branch is used");

  std::vector<ProbeResponse> out(probe_detunings.size());
  parallel_for(probe_detunings.size(), options.workers, [&](std::size_t i) {
    SystemParams p = params;
    p.probe_detuning = probe_detunings[i];
    out[i] = probe_response(p, fields, options.formula);
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    table.add_row({ordinary(probe_detunings[i]), out[i].mu_p, out[i].nu_p, out[i].A_minus.real(),
                   out[i].A_minus.imag()});
  }
  auto& meta = table.metadata();
  meta["probe_formula"] = to_string(options.formula);
  meta["n_cav"] = fields.n_cav;
  meta["mean_field_roots"] = fields.roots;
  meta["bistable"] = fields.bistable;
  meta["mean_field_residual"] = fields.residual;
  return table;
}

}  // namespace omx2d
