// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "omx2d/blockade.hpp"
#include "omx2d/errors.hpp"
#include "omx2d/features.hpp"
#include "omx2d/grid.hpp"
#include "omx2d/linres.hpp"
#include "omx2d/omit.hpp"
#include "omx2d/presets.hpp"
#include "omx2d/sweep.hpp"

using namespace omx2d;
namespace fs = std::filesystem;

namespace {

constexpr double MHz = two_pi * 1e6;
constexpr double kHz = two_pi * 1e3;
const Complex I{0, 1};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int workers() { return default_worker_count(); }

// ---- 1 -------------------------------------------------------------------------

Verdict blockade_dips() {
  const auto t0 = std::chrono::steady_clock::now();
  const Preset p = load_preset("fig3");
  const auto runs = run_preset(p, {workers(), false});
  const double elapsed = seconds_since(t0);
  const double step = 0.5e6;
  const double expect[2] = {-4e6, -8e6};  // lambda = 0, lambda = g
  Verdict v{elapsed <= 600.0, ""};
  for (int k = 0; k < 2; ++k) {
    const ScanTable& t = runs[k].table;
    const auto d = t.column("Delta/2pi_Hz");
    const auto g2 = t.column("g2");
    std::size_t best = 0;
    for (std::size_t i = 0; i < g2.size(); ++i) {
      if (std::isfinite(g2[i]) && (!std::isfinite(g2[best]) || g2[i] < g2[best])) best = i;
    }
    const bool ok = std::abs(d[best] - expect[k]) <= step + 1e-6 && t.flagged_rows() == 0;
    v.pass = v.pass && ok;
    v.detail += fmt("%s min g2 %.3g at %.2f MHz (want %.1f); ", runs[k].name.c_str(), g2[best], d[best] / 1e6,
                    expect[k] / 1e6);
  }
  const double g2c = [&] {
    double m = INFINITY;
    for (double x : runs[2].table.column("g2")) m = std::min(m, x);
    return m;
  }();
  v.detail += fmt("%s min g2 %.3g; three curves in %.0f s (limit 600)", runs[2].name.c_str(), g2c, elapsed);
  return v;
}

// ---- 2 -------------------------------------------------------------------------

ComplexMatrix ladder(int n) {
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
  return a;
}

ComplexMatrix dense_null_state(const SystemParams& p, const HilbertDims& d) {
  const int n = d.total();
  auto id = [](int m) { return ComplexMatrix::Identity(m, m); };
  auto k3 = [](const ComplexMatrix& x, const ComplexMatrix& y, const ComplexMatrix& z) {
    return Eigen::kroneckerProduct(x, Eigen::kroneckerProduct(y, z).eval()).eval();
  };
  const ComplexMatrix ops[3] = {k3(ladder(d.photon), id(d.nanobeam), id(d.graphene)),
                                k3(id(d.photon), ladder(d.nanobeam), id(d.graphene)),
                                k3(id(d.photon), id(d.nanobeam), ladder(d.graphene))};
  const Occupancies occ = p.occupancies();
  const double rates[3] = {p.kappa_a, p.kappa_b, p.kappa_c};
  const double nth[3] = {occ.photon, occ.nanobeam, occ.graphene};
  const ComplexMatrix H = hamiltonian_rotating(p, d).entries();
  const ComplexMatrix E = id(n);
  ComplexMatrix L = -I * (Eigen::kroneckerProduct(E, H).eval() - Eigen::kroneckerProduct(H.transpose(), E).eval());
  auto add = [&](const ComplexMatrix& J, double r) {
    const ComplexMatrix jj = J.adjoint() * J;
    L += r * (Eigen::kroneckerProduct(J.conjugate(), J).eval() - 0.5 * Eigen::kroneckerProduct(E, jj).eval() -
              0.5 * Eigen::kroneckerProduct(jj.transpose(), E).eval());
  };
  for (int m = 0; m < 3; ++m) {
    add(ops[m], rates[m] * (nth[m] + 1));
    add(ops[m].adjoint(), rates[m] * nth[m]);
  }
  Eigen::BDCSVD<ComplexMatrix> svd(L, Eigen::ComputeFullV);
  const ComplexVector v = svd.matrixV().col(L.cols() - 1);
  ComplexMatrix rho = Eigen::Map<const ComplexMatrix>(v.data(), n, n);
  return rho / rho.trace();
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  const ComplexMatrix d = a - b;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Verdict solver_correctness() {
  SystemParams p;
  p.omega_b = 2.0;
  p.omega_c = 1.7;
  p.g = 0.3;
  p.lambda = 0.2;
  p.kappa_a = 1.0;
  p.kappa_b = 0.4;
  p.kappa_c = 0.3;
  p.detuning = -0.4;
  p.drive = Complex(0.3, 0.1);
  p.thermal = Occupancies{0.0, 0.3, 0.2};
  const HilbertDims d{3, 3, 3};
  const SuperOperator L = liouvillian(hamiltonian_rotating(p, d), thermal_channels(p));
  const ComplexMatrix dense = dense_null_state(p, d);
  double worst = 0.0;
  for (auto m : {SteadyStateMethod::direct, SteadyStateMethod::krylov}) {
    SteadyStateOptions o;
    o.method = m;
    worst = std::max(worst, (steady_state(L, o).entries - dense).cwiseAbs().maxCoeff());
  }
  const DensityMatrix start = DensityMatrix::product(fock_projector(0, 3), fock_projector(2, 3), fock_projector(1, 3));
  const DensityMatrix late = propagate(start, L, 120.0, 0.1 / L.norm_bound() * 0.9);
  const double dist = trace_distance(late.entries, dense);

  SystemParams q = p;
  q.g = q.lambda = 0.0;
  q.thermal = Occupancies{};
  q.detuning = 0.3;
  const HilbertDims dc{8, 2, 2};
  const DensityMatrix rho = steady_state(liouvillian(hamiltonian_rotating(q, dc), thermal_channels(q)));
  const Complex alpha = q.drive / Complex(0.5 * q.kappa_a, -q.detuning);
  ComplexVector vac = ComplexVector::Zero(2);
  vac(0) = 1.0;
  const ComplexVector psi =
      Eigen::kroneckerProduct(coherent_amplitudes(alpha, dc.photon), Eigen::kroneckerProduct(vac, vac).eval()).eval();
  const double fidelity = (psi.adjoint() * rho.entries * psi)(0, 0).real() / psi.squaredNorm();

  return {worst <= 1e-8 && dist <= 1e-6 && fidelity >= 1 - 1e-6,
          fmt("dense vs sparse max entry diff %.2e (<= 1e-8), propagation trace distance %.2e (<= 1e-6), "
              "coherent fidelity 1 - %.2e (>= 1 - 1e-6)",
              worst, dist, 1 - fidelity)};
}

// ---- 3 -------------------------------------------------------------------------

Verdict coherent_control() {
  SystemParams p = load_preset("fig3").curves[0].config.params;  // T = 10 mK thermal mechanics
  p.g = p.lambda = 0.0;
  p.detuning = 0.0;
  p.drive = 0.1 * 0.5 * p.kappa_a;  // |alpha|^2 = 1e-2
  const BlockadePoint b = blockade_point(p, {6, 4, 4});
  return {std::abs(b.g2 - 1) <= 1e-4 && b.n_photon <= 1e-2 + 1e-12,
          fmt("g2 = 1 %+.2e at n = %.4g, photon cutoff 6", b.g2 - 1, b.n_photon)};
}

// ---- 4 -------------------------------------------------------------------------

Verdict omit_cancellation() {
  const auto t0 = std::chrono::steady_clock::now();
  const Preset pre = load_preset("fig5c");
  SystemParams p = pre.curves[3].config.params;  // lambda = -g, matched mechanics
  const MeanFields f = mean_field_steady(p);
  // static mean-field shift of the cavity, recomputed from the fields
  const Complex B0 = -I * p.g * f.n_cav / Complex(0.5 * p.kappa_b, p.omega_b);
  const Complex C0 = -I * p.lambda * f.n_cav / Complex(0.5 * p.kappa_c, p.omega_c);
  const Complex Q = 0.5 * p.kappa_a - I * p.detuning + 2.0 * I * (p.g * B0.real() + p.lambda * C0.real());
  const auto grid = linspace(angular(98e6), angular(102e6), 10000);
  double max_p = 0.0, max_rel = 0.0;
  bool identical = p.omega_b == p.omega_c && p.kappa_b == p.kappa_c && p.lambda == -p.g;
  for (double dp : grid) {
    p.probe_detuning = dp;
    const ProbeResponse r = probe_response(p, f);
    const Complex bare = p.probe_amplitude / (Q - I * dp);
    max_p = std::max(max_p, std::abs(r.P));
    max_rel = std::max(max_rel, std::abs(r.A_minus - bare) / std::abs(bare));
  }
  const double elapsed = seconds_since(t0);
  return {identical && max_p == 0.0 && max_rel <= 1e-12 && elapsed < 1.0,
          fmt("max |P| = %.3g, max relative deviation from the bare response %.2e (<= 1e-12), 1e4 points in %.3f s",
              max_p, max_rel, elapsed)};
}

// ---- 5 -------------------------------------------------------------------------

Verdict double_window() {
  const auto t0 = std::chrono::steady_clock::now();
  const Preset pre = load_preset("fig5a");
  SystemParams p = pre.curves[1].config.params;  // delta = +0.01 omega_b
  const double wb = p.omega_b, delta = p.mechanical_detuning();
  const auto grid = linspace(angular(98e6), angular(102e6), 10000);
  const MeanFields f = mean_field_steady(p);
  std::vector<double> x, mu;
  for (double dp : grid) {
    p.probe_detuning = dp;
    x.push_back(dp);
    mu.push_back(probe_response(p, f).mu_p);
  }
  // transmission maxima are the absorption minima
  const double range = *std::max_element(mu.begin(), mu.end()) - *std::min_element(mu.begin(), mu.end());
  const auto dips = local_minima(x, mu, 0.1 * range);
  const double near = 1e-3 * wb;
  bool two = dips.size() == 2;
  if (two) {
    two = std::abs(dips[0].x - (wb - delta)) <= near && std::abs(dips[1].x - wb) <= near;
  }
  std::string where;
  for (const auto& e : dips) where += fmt("%.4f ", ordinary(e.x) / 1e6);

  SystemParams q = pre.curves[3].config.params;  // delta = 0
  q.lambda = q.g;
  q.probe_detuning = q.omega_b;
  const double centre = probe_response(q, mean_field_steady(q)).mu_p;
  const double elapsed = seconds_since(t0);
  return {two && centre < 0.0 && elapsed < 1.0,
          fmt("%zu transmission maxima at [ %s] MHz (want %.3f and %.3f); lambda = g window centre mu_p = %.4g; %.3f s",
              dips.size(), where.c_str(), ordinary(wb - delta) / 1e6, ordinary(wb) / 1e6, centre, elapsed)};
}

// ---- 6 -------------------------------------------------------------------------

Verdict spectrum_dual_path() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  int draws = 0, rejected = 0;
  double worst = 0.0;
  while (draws < 100) {
    LinearizedParams p;
    p.omega_b = logu(10, 1000) * MHz;
    p.omega_c = p.omega_b * (0.8 + 0.4 * u(rng));
    p.kappa_a = logu(0.1, 2000) * MHz;
    p.kappa_b = logu(1e-3, 10) * MHz;
    p.kappa_c = logu(1e-3, 10) * MHz;
    p.detuning = (2 * u(rng) - 1) * 2 * p.omega_b;
    p.G = std::polar(logu(0.01, 50) * MHz, two_pi * u(rng));
    p.coupling_ratio = (2 * u(rng) - 1) * 3;
    p.occupancies = {logu(1e-3, 1), logu(1e-2, 1e3), logu(1e-2, 1e3)};
    const Stability st = stability(p);
    if (!st.stable || !st.drift_stable) {
      ++rejected;
      continue;
    }
    ++draws;
    std::vector<double> ws = logspace(1e-3 * p.omega_b, 10 * std::max(p.omega_b, std::abs(p.detuning)), 100);
    for (int i = 0; i < 100; ++i) ws.push_back(-ws[i]);
    double peak = 0.0;
    std::vector<double> ref(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) peak = std::max(peak, ref[i] = sbb_langevin(p, ws[i]));
    const double floor = 1e-12 * peak;
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const double closed = sbb_closed(p, ws[i]).total;
      worst = std::max(worst, std::abs(closed - ref[i]) / std::max(ref[i], floor));
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-9 && elapsed < 60.0,
          fmt("worst relative deviation %.2e (<= 1e-9) over %d stable draws x 200 points (%d unstable draws skipped), "
              "%.2f s",
              worst, draws, rejected, elapsed)};
}

// ---- 7 -------------------------------------------------------------------------

Verdict decoupled_area() {
  LinearizedParams p = LinearizedParams::from_system(load_preset("fig6b").curves[0].config.params, 0.0);
  const PhononNumber n = phonon_number(p);
  const double nb = p.occupancies.nanobeam;
  return {nb == 100.0 && std::abs(n.n_m - nb) <= 1e-4,
          fmt("G = 0: n_m = %.8f vs n_b = %.0f (|diff| %.2e <= 1e-4), %d panels", n.n_m, nb, std::abs(n.n_m - nb),
              n.panels)};
}

// ---- 8 -------------------------------------------------------------------------

Verdict narrow_dip() {
  const Preset pre = load_preset("fig6b");
  const PresetCurve* curve = nullptr;
  for (const auto& c : pre.curves) {
    if (c.config.coupling_ratio && *c.config.coupling_ratio == 0.01) curve = &c;
  }
  if (!curve) return {false, "preset has no eps = 0.01 curve"};
  const double kc = curve->config.params.kappa_c, wb = curve->config.params.omega_b;
  const ScanTable t = run_sweep(curve->config, {workers(), false});
  const auto w = t.column("omega/2pi_Hz");
  const auto s = t.column("s_bb");
  // dip closest to +omega_b and the background level within 20 kappa_c of it
  std::vector<double> x, y;
  double background = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::abs(w[i] - ordinary(wb)) <= 20 * ordinary(kc)) {
      x.push_back(w[i]);
      y.push_back(s[i]);
      background = std::max(background, s[i]);
    }
  }
  const auto dips = local_minima(x, y);
  if (dips.empty()) return {false, "no dip near +omega_b"};
  const Extremum* best = &dips[0];
  for (const auto& d : dips) {
    if (std::abs(d.x - ordinary(wb)) < std::abs(best->x - ordinary(wb))) best = &d;
  }
  const double fwhm = width_at_half_depth(x, y, best->index, background);
  const double ratio = fwhm / ordinary(kc);
  return {std::abs(ratio - 1) <= 0.2 && std::abs(best->x - ordinary(wb)) <= ordinary(kc),
          fmt("dip at omega_b %+.0f Hz, depth %.1f%%, FWHM %.0f Hz = %.2f kappa_c (want 0.8 .. 1.2)",
              best->x - ordinary(wb), 100 * (1 - best->y / background), fwhm, ratio)};
}

// ---- 9 -------------------------------------------------------------------------

Verdict backaction_asymptotics() {
  const RunConfig c = load_preset("fig7").curves[0].config;
  SystemParams s = c.params;
  s.detuning = -s.omega_b;
  LinearizedParams p = LinearizedParams::from_system(s, *c.coupling_G);
  p.coupling_ratio = 0.0;
  const double gamma = backaction(p).gamma_b_opt;
  const double asym = 4 * std::norm(p.G) / p.kappa_a;
  const double dev = std::abs(gamma / asym - 1);

  LinearizedParams q = p;
  q.omega_c = q.omega_b;
  q.kappa_c = q.kappa_b;
  const BackactionResult r0 = backaction(q);
  double worst = 0.0;
  for (double e : {0.01, 0.02, 0.5, 1.0, 10.0}) {
    q.coupling_ratio = e;
    const BackactionResult r = backaction(q);
    worst = std::max(worst, std::abs(r.gamma_b_opt / r0.gamma_b_opt - (1 + e * e)) / (1 + e * e));
    worst = std::max(worst, std::abs(r.delta_omega_b / r0.delta_omega_b - (1 + e * e)) / (1 + e * e));
  }
  return {dev <= 0.12 && worst <= 1e-12,
          fmt("gamma_opt/2pi = %.4g MHz vs 4|G|^2/kappa_a = %.4g MHz (%.1f%%, <= 12%%); (1+eps^2) scaling error %.1e",
              ordinary(gamma) / 1e6, ordinary(asym) / 1e6, 100 * dev, worst)};
}

// ---- 10 ------------------------------------------------------------------------

Verdict cooling_limit() {
  LinearizedParams p;
  p.G = 1 * MHz;
  p.coupling_ratio = 0;
  p.omega_b = p.omega_c = 100 * MHz;
  p.kappa_a = 10 * MHz;
  p.detuning = -p.omega_b;
  p.kappa_b = p.kappa_c = 1 * kHz;
  p.occupancies = {0, 5, 0};
  PhononNumberOptions o;
  o.quadrature.abs_tol = 1e-4;
  const double n = phonon_number(p, o).n_m;
  const double gamma = 4 * std::norm(p.G) / p.kappa_a;
  const double n_min = std::pow(p.kappa_a / (4 * p.omega_b), 2);
  const double expect = (p.kappa_b * 5 + gamma * n_min) / (p.kappa_b + gamma);
  const bool gentle = std::abs(n / expect - 1) <= 0.1;
  std::string detail = fmt("gentle: n_m = %.5f vs %.5f (%.1f%%, <= 10%%)", n, expect, 100 * std::abs(n / expect - 1));

  const Preset pre = load_preset("fig9a");
  bool qualitative = true;
  for (const auto& run : run_preset(pre, {workers(), false})) {
    const auto nm = run.table.column("n_m");
    bool monotone = run.table.flagged_rows() == 0;
    for (std::size_t i = 1; i < nm.size(); ++i) monotone = monotone && nm[i] < nm[i - 1];
    const double last = *std::min_element(nm.begin(), nm.end());
    const bool crosses = nm.front() > 1 && last < 1;
    qualitative = qualitative && monotone && crosses;
    detail += fmt("; %s: n_m %.3g -> %.3g, %s, %s", run.name.c_str(), nm.front(), nm.back(),
                  monotone ? "decreasing" : "not monotone", crosses ? "crosses 1" : "does not cross 1");
  }
  return {gentle && qualitative, detail};
}

// ---- 11 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("omx2d_accept_" + std::to_string(::getpid()));
  std::string detail;
  bool ok = true;
  for (const char* preset : {"fig5c", "fig7", "fig9b"}) {
    for (int w : {1, 8}) {
      const fs::path out = root / (std::string(preset) + "_w" + std::to_string(w));
      fs::create_directories(out);
      const std::string cmd = std::string(OMX2D_CLI_PATH) + " preset " + preset + " --workers " + std::to_string(w) +
                              " --out " + out.string() + " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      if (code != 0 && code != 4) {
        ok = false;
        detail += fmt("%s workers %d exit %d; ", preset, w, code);
      }
    }
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(root / (std::string(preset) + "_w1"))) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      same += slurp(e.path()) == slurp(root / (std::string(preset) + "_w8") / e.path().filename());
    }
    ok = ok && files > 0 && same == files;
    detail += fmt("%s %d/%d CSV identical; ", preset, same, files);
  }
  fs::remove_all(root);
  return {ok, detail + "workers 1 vs 8"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"blockade dip positions", blockade_dips},
      {"steady-state solver correctness", solver_correctness},
      {"coherent-light control", coherent_control},
      {"OMIT cancellation identity", omit_cancellation},
      {"double transparency window", double_window},
      {"spectrum dual-path oracle", spectrum_dual_path},
      {"decoupled spectrum area", decoupled_area},
      {"narrow dip width", narrow_dip},
      {"backaction asymptotics", backaction_asymptotics},
      {"sideband-cooling limit", cooling_limit},
      {"determinism across worker counts", determinism},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", index, name, v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed;
}
