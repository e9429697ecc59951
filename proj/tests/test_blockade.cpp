#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>

#include "omx2d/blockade.hpp"
#include "omx2d/errors.hpp"

using namespace omx2d;

namespace {

// dimensionless units, kappa_a = 1
SystemParams scaled(double g = 0.3, double lambda = 0.2) {
  SystemParams p;
  p.omega_b = 2.0;
  p.omega_c = 1.7;
  p.g = g;
  p.lambda = lambda;
  p.kappa_a = 1.0;
  p.kappa_b = 0.2;
  p.kappa_c = 0.1;
  p.detuning = -0.4;
  p.drive = Complex(0.3, 0.1);
  p.thermal = Occupancies{0.0, 0.3, 0.2};
  return p;
}

ComplexMatrix ladder(int n) {
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
  return a;
}

ComplexMatrix kron3(const ComplexMatrix& x, const ComplexMatrix& y, const ComplexMatrix& z) {
  return Eigen::kroneckerProduct(x, Eigen::kroneckerProduct(y, z).eval()).eval();
}

// Dense column-stacked Liouvillian built straight from the definition,
// vec(A X B) = (B^T (x) A) vec X, and its null vector by SVD.
ComplexMatrix oracle_steady_state(const SystemParams& p, const HilbertDims& d) {
  const int n = d.total();
  const ComplexMatrix Ia = ComplexMatrix::Identity(d.photon, d.photon);
  const ComplexMatrix Ib = ComplexMatrix::Identity(d.nanobeam, d.nanobeam);
  const ComplexMatrix Ic = ComplexMatrix::Identity(d.graphene, d.graphene);
  const ComplexMatrix a = kron3(ladder(d.photon), Ib, Ic);
  const ComplexMatrix b = kron3(Ia, ladder(d.nanobeam), Ic);
  const ComplexMatrix c = kron3(Ia, Ib, ladder(d.graphene));
  const ComplexMatrix I = ComplexMatrix::Identity(n, n);
  const Occupancies occ = p.occupancies();

  const ComplexMatrix H = hamiltonian_rotating(p, d).entries();
  const Complex i(0, 1);
  ComplexMatrix L = -i * (Eigen::kroneckerProduct(I, H).eval() - Eigen::kroneckerProduct(H.transpose(), I).eval());
  auto dissipator = [&](const ComplexMatrix& J, double rate) {
    const ComplexMatrix JdJ = J.adjoint() * J;
    L += rate * (Eigen::kroneckerProduct(J.conjugate(), J).eval() - 0.5 * Eigen::kroneckerProduct(I, JdJ).eval() -
                 0.5 * Eigen::kroneckerProduct(JdJ.transpose(), I).eval());
  };
  const std::pair<const ComplexMatrix*, std::pair<double, double>> modes[] = {
      {&a, {p.kappa_a, occ.photon}}, {&b, {p.kappa_b, occ.nanobeam}}, {&c, {p.kappa_c, occ.graphene}}};
  for (const auto& [op, rn] : modes) {
    dissipator(*op, rn.first * (rn.second + 1));
    dissipator(op->adjoint(), rn.first * rn.second);
  }
  Eigen::BDCSVD<ComplexMatrix> svd(L, Eigen::ComputeFullV);
  const ComplexVector v = svd.matrixV().col(L.cols() - 1);
  // next smallest singular value must be well separated
  REQUIRE(svd.singularValues()(L.cols() - 2) > 1e3 * svd.singularValues()(L.cols() - 1));
  ComplexMatrix rho = Eigen::Map<const ComplexMatrix>(v.data(), n, n);
  return rho / rho.trace();
}

}  // namespace

TEST_CASE("steady state against a dense null-space oracle") {
  const HilbertDims d{3, 3, 2};
  const SystemParams p = scaled();
  const ComplexMatrix expect = oracle_steady_state(p, d);
  const SuperOperator L = liouvillian(hamiltonian_rotating(p, d), thermal_channels(p));

  // the assembled sparse matrix equals the dense definition
  const ComplexMatrix X = ComplexMatrix::Random(d.total(), d.total());
  const ComplexMatrix LX = L.apply(X);
  const ComplexVector lx = SparseMatrix(L.matrix()) * Eigen::Map<const ComplexVector>(X.data(), X.size());
  CHECK((Eigen::Map<const ComplexVector>(LX.data(), LX.size()) - lx).cwiseAbs().maxCoeff() < 1e-12);

  for (auto method : {SteadyStateMethod::direct, SteadyStateMethod::krylov}) {
    SteadyStateOptions o;
    o.method = method;
    const auto sol = solve_steady_state(L, o);
    CAPTURE(int(method));
    CHECK(sol.report.method == method);
    CHECK((sol.rho.entries - expect).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(sol.rho.trace() - 1.0) < 1e-14);
    CHECK(sol.rho.hermiticity_defect() < 1e-14);
    CHECK(sol.rho.min_eigenvalue() > -1e-10);
    CHECK(sol.report.residual < 1e-9);
  }
}

TEST_CASE("Krylov and direct agree on a realistic point") {
  SystemParams p;
  const double MHz = angular(1e6);
  p.omega_b = 100 * MHz;
  p.omega_c = 100 * MHz;
  p.g = 20 * MHz;
  p.lambda = 20 * MHz;
  p.kappa_a = 1 * MHz;
  p.kappa_b = 0.1 * MHz;
  p.kappa_c = 0.001 * MHz;
  p.drive = 0.04 * 0.5 * p.kappa_a;
  p.detuning = -8 * MHz;
  const HilbertDims d{3, 5, 5};
  SteadyStateOptions direct, krylov;
  direct.method = SteadyStateMethod::direct;
  krylov.method = SteadyStateMethod::krylov;
  const auto x = blockade_point(p, d, direct);
  const auto y = blockade_point(p, d, krylov);
  CHECK(y.report.iterations > 0);
  CHECK(x.g2 == doctest::Approx(y.g2).epsilon(1e-7));
  CHECK(x.n_photon == doctest::Approx(y.n_photon).epsilon(1e-9));
}

TEST_CASE("driven empty cavity relaxes to a coherent state") {
  SystemParams p = scaled(0.0, 0.0);
  p.thermal = Occupancies{};
  p.detuning = 0.0;
  p.drive = 0.04 * 0.5 * p.kappa_a;  // alpha = Omega / (kappa_a/2) = 0.04
  const HilbertDims d{6, 2, 2};
  const DensityMatrix rho = steady_state(liouvillian(hamiltonian_rotating(p, d), thermal_channels(p)));

  const Complex alpha = p.drive / Complex(0.5 * p.kappa_a, -p.detuning);
  CHECK(std::abs(alpha - 0.04) < 1e-15);
  const ComplexVector psi = kron3(coherent_amplitudes(alpha, d.photon), fock_projector(0, 2).col(0),
                                  fock_projector(0, 2).col(0));
  const double fidelity = (psi.adjoint() * rho.entries * psi)(0, 0).real();
  CHECK(fidelity == doctest::Approx(1.0).epsilon(1e-12));
  const Complex a_mean = rho.expectation(mode_lowering(Mode::photon, d));
  CHECK(std::abs(a_mean - alpha) < 1e-12);
  CHECK(g2_numeric(rho) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(photon_number(rho) == doctest::Approx(0.0016).epsilon(1e-8));

  // detuned: alpha = Omega / (kappa/2 - i Delta)
  p.detuning = 0.7;
  const DensityMatrix r2 = steady_state(liouvillian(hamiltonian_rotating(p, d), thermal_channels(p)));
  const Complex a2 = p.drive / Complex(0.5 * p.kappa_a, -p.detuning);
  CHECK(std::abs(r2.expectation(mode_lowering(Mode::photon, d)) - a2) < 1e-12);
}

TEST_CASE("thermal channel gives the Bose-Einstein state") {
  SystemParams p = scaled(0.0, 0.0);
  p.drive = 0.0;
  p.thermal = Occupancies{0.0, 0.4, 0.0};
  const HilbertDims d{1, 12, 1};
  const DensityMatrix rho = steady_state(liouvillian(hamiltonian_rotating(p, d), thermal_channels(p)));
  const ComplexMatrix expect = thermal_state(0.4, 12);
  CHECK((rho.entries - expect).cwiseAbs().maxCoeff() < 1e-12);
  // truncated weights still follow the geometric law
  CHECK(expect(1, 1).real() / expect(0, 0).real() == doctest::Approx(0.4 / 1.4));
}

TEST_CASE("vacuum gives an undefined g2") {
  SystemParams p = scaled();
  p.drive = 0.0;
  p.thermal = Occupancies{};
  const HilbertDims d{3, 3, 2};
  const DensityMatrix rho = steady_state(liouvillian(hamiltonian_rotating(p, d), thermal_channels(p)));
  CHECK(photon_number(rho) < 1e-14);
  try {
    g2_numeric(rho);
    FAIL("expected undefined correlation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::undefined_correlation);
  }
}

TEST_CASE("degenerate steady state is reported") {
  // only the photon decays; the mechanical modes keep any initial state
  const SystemParams p = scaled(0.0, 0.0);
  const HilbertDims d{3, 3, 2};
  const SuperOperator L(hamiltonian_rotating(p, d), {{Mode::photon, 1.0, 0.0}});
  for (auto method : {SteadyStateMethod::direct, SteadyStateMethod::krylov}) {
    SteadyStateOptions o;
    o.method = method;
    CAPTURE(int(method));
    try {
      solve_steady_state(L, o);
      FAIL("expected a degenerate steady state");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate_steady_state);
    }
  }
}

TEST_CASE("liouvillian validation") {
  const SystemParams p = scaled();
  const HilbertDims d{2, 2, 2};
  const OperatorMatrix h = hamiltonian_rotating(p, d);
  CHECK_THROWS_AS(liouvillian(h, {}), Error);
  CHECK_THROWS_AS(liouvillian(h, {{Mode::photon, 0.0, 0.0}}), Error);
  CHECK_THROWS_AS(liouvillian(h, {{Mode::photon, 1.0, -0.1}}), Error);
  ComplexMatrix bad = h.entries();
  bad(0, 1) += 1.0;
  CHECK_THROWS_AS(liouvillian(OperatorMatrix(d, bad), {{Mode::photon, 1.0, 0.0}}), Error);
}

TEST_CASE("time evolution") {
  const HilbertDims d{3, 3, 2};
  const SystemParams p = scaled();
  const DensityMatrix start = DensityMatrix::product(fock_projector(1, 3), thermal_state(0.5, 3), fock_projector(0, 2));

  SUBCASE("zero generator leaves the state alone") {
    const SuperOperator zero(OperatorMatrix::zero(d), {});
    const DensityMatrix out = propagate(start, zero, 5.0, 0.01);
    CHECK((out.entries - start.entries).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("unitary evolution preserves purity and trace") {
    const SuperOperator L(hamiltonian_rotating(p, d), {});
    const ComplexVector psi = kron3(coherent_amplitudes(0.3, 3), fock_projector(0, 3).col(0), fock_projector(1, 2).col(1));
    const DensityMatrix pure = DensityMatrix::pure(d, psi / psi.norm());
    const DensityMatrix out = propagate(pure, L, 3.0, 0.005);
    CHECK(std::abs(out.trace() - 1.0) < 1e-10);
    CHECK((out.entries * out.entries).trace().real() == doctest::Approx(1.0).epsilon(1e-8));
    // exact propagator
    const Eigen::ComplexEigenSolver<ComplexMatrix> es(hamiltonian_rotating(p, d).entries());
    const ComplexVector ph = (Complex(0, -3.0) * es.eigenvalues().array()).exp();
    const ComplexMatrix U = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().inverse();
    CHECK((out.entries - U * pure.entries * U.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("dissipative evolution preserves the trace and reaches the steady state") {
    const SuperOperator L = liouvillian(hamiltonian_rotating(p, d), thermal_channels(p));
    const double dt = 0.09 / L.norm_bound();
    const DensityMatrix mid = propagate(start, L, 2.0, dt);
    CHECK(std::abs(mid.trace() - 1.0) < 1e-12);
    CHECK(mid.hermiticity_defect() < 1e-12);
    // slowest rate is kappa_c = 0.1; t = 400 gives e^-40
    const DensityMatrix late = propagate(start, L, 400.0, dt);
    CHECK((late.entries - steady_state(L).entries).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("step size must resolve the generator") {
    const SuperOperator L = liouvillian(hamiltonian_rotating(p, d), thermal_channels(p));
    CHECK_THROWS_AS(propagate(start, L, 1.0, 1.0), Error);
    CHECK_THROWS_AS(propagate(start, L, 1.0, -0.1), Error);
  }
}

TEST_CASE("weak-drive closed forms") {
  const double gamma = 1.0;
  // chi_t = 0: 4 |gamma + 2i Delta|^2 / |gamma + i Delta|^2
  CHECK(g2_analytic(0.0, 0.0, gamma) == doctest::Approx(4.0));
  CHECK(g2_analytic(1.0, 0.0, gamma) == doctest::Approx(4.0 * 5.0 / 2.0));
  // zero of the numerator at Delta = chi_t when gamma -> 0, pole region at 2 chi_t
  CHECK(g2_analytic(3.0, 3.0, 1e-3) < 1e-5);
  CHECK(g2_analytic(6.0, 3.0, 1e-3) > 1e6);
  for (double delta : {-5.0, -1.0, 0.3, 2.0}) {
    CHECK(g2_analytic_flipped(delta, 1.5, gamma) == doctest::Approx(g2_analytic(-delta, 1.5, gamma)));
  }
  SystemParams p = scaled();
  CHECK(bind_gamma(p, GammaBinding::kappa_a) == p.kappa_a);
  CHECK(bind_gamma(p, GammaBinding::half_kappa_a) == 0.5 * p.kappa_a);
}

TEST_CASE("Kerr blockade in a strongly coupled toy model") {
  // chi_t = g^2 / omega_b = 2.5 kappa_a
  SystemParams p;
  p.omega_b = 10.0;
  p.omega_c = 9.0;
  p.g = 5.0;
  p.lambda = 0.0;
  p.kappa_a = 1.0;
  p.kappa_b = 0.05;
  p.kappa_c = 0.05;
  p.drive = 0.02;
  const HilbertDims d{3, 6, 1};
  const double chi = kerr(p).chi_t;
  p.detuning = -chi;  // one-photon resonance
  const BlockadePoint one = blockade_point(p, d);
  p.detuning = -2 * chi;  // two-photon resonance
  const BlockadePoint two = blockade_point(p, d);
  CHECK(one.g2 < 0.3);
  CHECK(two.g2 > 1.0);
  CHECK(one.n_photon > two.n_photon);
}

TEST_CASE("blockade scan table and convergence report") {
  SystemParams p;
  p.omega_b = 10.0;
  p.omega_c = 9.0;
  p.g = 5.0;
  p.kappa_a = 1.0;
  p.kappa_b = 0.05;
  p.kappa_c = 0.05;
  p.drive = 0.02;
  BlockadeScanOptions o;
  o.convergence_check = true;
  o.workers = 2;
  const std::vector<double> deltas{-6.0, -2.5, 0.0};
  const ScanTable t = blockade_scan(p, deltas, {3, 6, 1}, o);
  REQUIRE(t.row_count() == 3);
  CHECK(t.columns() == std::vector<std::string>{"Delta/2pi_Hz", "g2", "n_photon", "g2_analytic",
                                                "g2_analytic_flipped"});
  CHECK(t.at(1, 0) == doctest::Approx(ordinary(-2.5)));
  CHECK(t.at(1, "g2_analytic") == doctest::Approx(g2_analytic(-2.5, 2.5, 1.0)));
  CHECK(t.at(1, "g2_analytic_flipped") == doctest::Approx(g2_analytic(2.5, 2.5, 1.0)));
  const auto& meta = t.metadata();
  CHECK(meta["truncation"] == nlohmann::json({3, 6, 1}));
  CHECK(meta["chi_t/2pi_Hz"].get<double>() == doctest::Approx(ordinary(2.5)));
  const auto& conv = meta["convergence"];
  CHECK(conv["enlarged_truncation"] == nlohmann::json({5, 8, 3}));
  CHECK(conv["points"].size() == 2);
  CHECK(conv["points"][0]["row"] == 1);  // the dip
  CHECK(t.warnings().empty() == conv["converged"].get<bool>());

  // a strong drive triggers the weak-drive warning
  p.drive = 0.5;
  const ScanTable strong = blockade_scan(p, {0.0}, {3, 6, 1});
  CHECK_FALSE(strong.warnings().empty());
}
