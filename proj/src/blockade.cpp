#include "omx2d/blockade.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "omx2d/errors.hpp"
#include "omx2d/sweep.hpp"

namespace omx2d {

namespace {

using Triplet = Eigen::Triplet<Complex>;

SparseMatrix to_sparse(const ComplexMatrix& m) {
  // exact zeros only; the operators here are built from integer ladders
  return m.sparseView(Complex(0.0), 0.0);
}

double inf_norm(const SparseMatrix& m) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) rows(it.row()) += std::abs(it.value());
  }
  return rows.size() ? rows.maxCoeff() : 0.0;
}

// A(i,k) entries as (row, col, value) lists.
std::vector<Triplet> entries_of(const SparseMatrix& m) {
  std::vector<Triplet> out;
  out.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) out.emplace_back(it.row(), it.col(), it.value());
  }
  return out;
}

// Triplets of L on column-stacked vec(rho): element (i,j) lives at i + j*D.
//   H_eff X      -> I (x) H_eff
//   X H_eff^dag  -> conj(H_eff) (x) I
//   J X J^dag    -> conj(J) (x) J
std::vector<Triplet> liouvillian_triplets(const SuperOperator& L) {
  const int d = L.dims().total();
  const auto heff = entries_of(L.effective_hamiltonian());
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(d) * 2 * heff.size());
  for (int j = 0; j < d; ++j) {
    for (const auto& t : heff) out.emplace_back(t.row() + j * d, t.col() + j * d, t.value());
  }
  for (const auto& t : heff) {
    for (int i = 0; i < d; ++i) out.emplace_back(i + t.row() * d, i + t.col() * d, std::conj(t.value()));
  }
  for (const auto& jump : L.jumps()) {
    const auto jt = entries_of(jump);
    for (const auto& outer : jt) {
      for (const auto& inner : jt) {
        out.emplace_back(inner.row() + outer.row() * d, inner.col() + outer.col() * d,
                         std::conj(outer.value()) * inner.value());
      }
    }
  }
  return out;
}

void require_square(const ComplexMatrix& m, const HilbertDims& dims, const char* what) {
  const int d = dims.total();
  if (m.rows() != d || m.cols() != d) {
    throw Error(ErrorKind::invalid_dimension, std::string(what) + ": matrix size does not match dims");
  }
}

// Preconditioner for A(X) = L X + s V Tr(X).
//
// Works in the Schur basis of H_eff = U T U^dag. The bulk is the exact inverse
// of Y -> T Y + Y T^dag - sigma Y (Bartels-Stewart). Entries (i,j) whose
// Bohr frequency Im(T_ii - T_jj) is within `window` of zero are the slow
// populations and degenerate coherences; on them the jump and trace terms
// matter, so those entries are replaced by an exact solve of A restricted to
// that coordinate block.
class SteadyStatePreconditioner {
 public:
  SteadyStatePreconditioner(const SuperOperator& L, double trace_scale, double sigma, double window,
                            int max_block)
      : sigma_(sigma) {
    Eigen::ComplexSchur<ComplexMatrix> schur(ComplexMatrix(L.effective_hamiltonian()));
    if (schur.info() != Eigen::Success) {
      throw Error(ErrorKind::degenerate_steady_state, "Schur decomposition of H_eff failed");
    }
    u_ = schur.matrixU();
    t_ = schur.matrixT();
    const int d = static_cast<int>(t_.rows());

    // narrow the window until the block fits
    for (; window >= 0.0; window = window > 1e-300 ? 0.5 * window : -1.0) {
      slow_.clear();
      for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
          if (std::abs(t_(i, i).imag() - t_(j, j).imag()) <= window) slow_.emplace_back(i, j);
        }
      }
      if (static_cast<int>(slow_.size()) <= max_block) break;
    }
    if (window < 0.0) slow_.clear();
    const int p = static_cast<int>(slow_.size());
    if (p == 0) return;

    std::vector<ComplexMatrix> jt;
    for (const auto& j : L.jumps()) jt.push_back(u_.adjoint() * (j * u_));
    ComplexMatrix c = ComplexMatrix::Zero(p, p);
    for (int col = 0; col < p; ++col) {
      const auto [i, j] = slow_[col];
      for (int row = 0; row < p; ++row) {
        const auto [k, l] = slow_[row];
        Complex v = 0.0;
        if (j == l) v += t_(k, i);
        if (i == k) v += std::conj(t_(l, j));
        for (const auto& m : jt) v += m(k, i) * std::conj(m(l, j));
        if (i == j) v += trace_scale * std::conj(u_(0, k)) * u_(0, l);
        c(row, col) = v;
      }
    }
    coarse_.compute(c);
  }

  ComplexMatrix apply(const ComplexMatrix& x) const {
    const int d = static_cast<int>(t_.rows());
    const ComplexMatrix cp = u_.adjoint() * x * u_;
    ComplexMatrix y(d, d);
    ComplexVector r(d);
    // column j of T Y + Y T^dag: (T + conj(T_jj) - sigma) y_j = c_j - sum_{k>j} conj(T_jk) y_k
    for (int j = d - 1; j >= 0; --j) {
      r = cp.col(j);
      const int tail = d - 1 - j;
      if (tail > 0) r.noalias() -= y.rightCols(tail) * t_.row(j).tail(tail).adjoint();
      const Complex shift = std::conj(t_(j, j)) - sigma_;
      for (int i = d - 1; i >= 0; --i) {
        const Complex yi = r(i) / (t_(i, i) + shift);
        y(i, j) = yi;
        if (i > 0) r.head(i).noalias() -= yi * t_.col(i).head(i);
      }
    }
    if (!slow_.empty()) {
      ComplexVector rc(slow_.size());
      for (std::size_t k = 0; k < slow_.size(); ++k) rc(k) = cp(slow_[k].first, slow_[k].second);
      const ComplexVector yc = coarse_.solve(rc);
      for (std::size_t k = 0; k < slow_.size(); ++k) y(slow_[k].first, slow_[k].second) = yc(k);
    }
    return u_ * y * u_.adjoint();
  }

 private:
  ComplexMatrix u_, t_;
  double sigma_;
  std::vector<std::pair<int, int>> slow_;
  Eigen::PartialPivLU<ComplexMatrix> coarse_;
};

struct KrylovResult {
  ComplexMatrix x;
  int iterations = 0;
};

// Restarted GMRES on A x = L x + V Tr(x) = V, right-preconditioned.
KrylovResult gmres_steady_state(const SuperOperator& L, const SteadyStateOptions& opt,
                                const ComplexMatrix* start = nullptr) {
  const int d = L.dims().total();
  const Eigen::Index n = static_cast<Eigen::Index>(d) * d;

  double min_rate = std::numeric_limits<double>::infinity(), max_rate = 0.0;
  for (const auto& ch : L.channels()) {
    min_rate = std::min(min_rate, ch.rate);
    max_rate = std::max(max_rate, ch.rate * (2.0 * ch.occupancy + 1.0));
  }
  // the trace term carries the scale of L so that relative residuals are meaningful
  const double scale = L.norm_bound();
  const SteadyStatePreconditioner precond(L, scale, 1e-3 * min_rate, opt.coarse_window * max_rate,
                                          opt.coarse_max_block);
  ComplexMatrix v0 = ComplexMatrix::Zero(d, d);
  v0(0, 0) = scale;

  auto apply_a = [&](const ComplexMatrix& x) {
    ComplexMatrix y = L.apply(x);
    y(0, 0) += scale * x.trace();
    return y;
  };
  auto as_matrix = [d](ComplexVector& v) { return Eigen::Map<ComplexMatrix>(v.data(), d, d); };

  const int m = std::max(1, opt.krylov_restart);
  const double bnorm = scale;
  ComplexMatrix x = start ? *start : precond.apply(v0);
  int total = 0;
  double previous = std::numeric_limits<double>::infinity();

  std::vector<ComplexVector> basis(m + 1, ComplexVector(n));
  ComplexMatrix h = ComplexMatrix::Zero(m + 1, m);
  std::vector<double> cs(m);
  std::vector<Complex> sn(m);
  ComplexVector g(m + 1);

  while (true) {
    ComplexMatrix r = v0 - apply_a(x);
    const double beta = r.norm();
    if (beta <= opt.krylov_tolerance * bnorm || total >= opt.krylov_max_iterations) break;
    // a full cycle that gains less than a factor 2 means rounding has taken over
    if (beta > 0.5 * previous) break;
    previous = beta;

    basis[0] = Eigen::Map<const ComplexVector>(r.data(), n) / beta;
    g.setZero();
    g(0) = beta;
    h.setZero();
    int k = 0;
    for (; k < m && total < opt.krylov_max_iterations; ++k, ++total) {
      ComplexMatrix z = precond.apply(as_matrix(basis[k]));
      ComplexMatrix w = apply_a(z);
      basis[k + 1] = Eigen::Map<const ComplexVector>(w.data(), n);
      for (int i = 0; i <= k; ++i) {
        h(i, k) = basis[i].dot(basis[k + 1]);
        basis[k + 1] -= h(i, k) * basis[i];
      }
      h(k + 1, k) = basis[k + 1].norm();
      if (std::abs(h(k + 1, k)) > 0.0) basis[k + 1] /= h(k + 1, k);

      for (int i = 0; i < k; ++i) {
        const Complex t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -std::conj(sn[i]) * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double a = std::abs(h(k, k));
      const double b = std::abs(h(k + 1, k));
      const double rho = std::hypot(a, b);
      if (rho == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else if (a == 0.0) {
        cs[k] = 0.0;
        sn[k] = std::conj(h(k + 1, k)) / b;
      } else {
        cs[k] = a / rho;
        sn[k] = (h(k, k) / a) * std::conj(h(k + 1, k)) / rho;
      }
      h(k, k) = cs[k] * h(k, k) + sn[k] * h(k + 1, k);
      h(k + 1, k) = 0.0;
      g(k + 1) = -std::conj(sn[k]) * g(k);
      g(k) = cs[k] * g(k);
      if (std::abs(g(k + 1)) <= opt.krylov_tolerance * bnorm) {
        ++k;
        ++total;
        break;
      }
    }
    if (k == 0) break;
    const ComplexVector coeff =
        h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    ComplexVector update = ComplexVector::Zero(n);
    for (int i = 0; i < k; ++i) update += coeff(i) * basis[i];
    x += precond.apply(as_matrix(update));
  }
  return {std::move(x), total};
}

// Sparse LU with row 0 replaced by the functional sum_k w_k rho_kk.
ComplexMatrix constrained_solve(const std::vector<Triplet>& body, int d, const std::vector<double>& weights) {
  const Eigen::Index n = static_cast<Eigen::Index>(d) * d;
  std::vector<Triplet> trips = body;
  for (int k = 0; k < d; ++k) trips.emplace_back(0, k * d + k, Complex(weights[k]));
  SparseMatrix a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();

  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorKind::degenerate_steady_state, "steady state: singular Liouvillian (" + lu.lastErrorMessage() + ")");
  }
  ComplexVector rhs = ComplexVector::Zero(n);
  rhs(0) = 1.0;
  ComplexVector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw Error(ErrorKind::degenerate_steady_state, "steady state: solve failed");
  }
  return Eigen::Map<ComplexMatrix>(x.data(), d, d);
}

ComplexMatrix direct_steady_state(const SuperOperator& L) {
  const int d = L.dims().total();
  std::vector<Triplet> body;
  for (const auto& t : liouvillian_triplets(L)) {
    if (t.row() != 0) body.push_back(t);
  }
  // A second, differently weighted normalization must select the same state;
  // otherwise the kernel is more than one-dimensional and LU only returned noise.
  std::vector<double> ones(d, 1.0), ramp(d);
  for (int k = 0; k < d; ++k) ramp[k] = 1.0 + static_cast<double>(k) / d;
  ComplexMatrix x = constrained_solve(body, d, ones);
  ComplexMatrix y = constrained_solve(body, d, ramp);
  const Complex tx = x.trace(), ty = y.trace();
  if (std::abs(tx) < 1e-300 || std::abs(ty) < 1e-300 ||
      !((x / tx - y / ty).cwiseAbs().maxCoeff() < 1e-6)) {
    throw Error(ErrorKind::degenerate_steady_state, "steady state: Liouvillian kernel is not one-dimensional");
  }
  return x;
}

// Every mode damped: a, a^dag of all modes generate the whole operator algebra,
// so the kernel is one-dimensional and the second solve can be skipped.
bool all_modes_damped(const SuperOperator& L) {
  bool damped[3] = {false, false, false};
  for (const auto& ch : L.channels()) {
    if (ch.rate > 0.0) damped[static_cast<int>(ch.mode)] = true;
  }
  return damped[0] && damped[1] && damped[2];
}

std::string hz_label(double rad_s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "Delta/2pi=%.6g Hz", ordinary(rad_s));
  return buf;
}

}  // namespace

// ---- states ---------------------------------------------------------------

double DensityMatrix::hermiticity_defect() const {
  return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const ComplexMatrix herm = 0.5 * (entries + entries.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DensityMatrix DensityMatrix::pure(const HilbertDims& dims, const ComplexVector& psi) {
  dims.validate();
  if (psi.size() != dims.total()) {
    throw Error(ErrorKind::invalid_dimension, "pure: state size does not match dims");
  }
  return {dims, psi * psi.adjoint()};
}

DensityMatrix DensityMatrix::product(const ComplexMatrix& photon, const ComplexMatrix& nanobeam,
                                     const ComplexMatrix& graphene) {
  HilbertDims dims{static_cast<int>(photon.rows()), static_cast<int>(nanobeam.rows()),
                   static_cast<int>(graphene.rows())};
  dims.validate();
  if (photon.cols() != dims.photon || nanobeam.cols() != dims.nanobeam || graphene.cols() != dims.graphene) {
    throw Error(ErrorKind::invalid_dimension, "product: factors must be square");
  }
  ComplexMatrix full = Eigen::kroneckerProduct(photon, Eigen::kroneckerProduct(nanobeam, graphene).eval());
  return {dims, std::move(full)};
}

ComplexMatrix fock_projector(int n, int cutoff) {
  if (cutoff < 1 || n < 0 || n >= cutoff) {
    throw Error(ErrorKind::invalid_dimension, "fock_projector: level outside the cutoff");
  }
  ComplexMatrix p = ComplexMatrix::Zero(cutoff, cutoff);
  p(n, n) = 1.0;
  return p;
}

ComplexVector coherent_amplitudes(Complex alpha, int cutoff) {
  if (cutoff < 1) throw Error(ErrorKind::invalid_dimension, "coherent_amplitudes: cutoff must be >= 1");
  ComplexVector c(cutoff);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < cutoff; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

ComplexMatrix thermal_state(double mean_occupancy, int cutoff) {
  if (cutoff < 1) throw Error(ErrorKind::invalid_dimension, "thermal_state: cutoff must be >= 1");
  if (!(mean_occupancy >= 0.0)) throw Error(ErrorKind::invalid_parameter, "thermal_state: occupancy must be >= 0");
  // truncated Bose-Einstein weights, renormalized
  const double q = mean_occupancy / (mean_occupancy + 1.0);
  ComplexMatrix rho = ComplexMatrix::Zero(cutoff, cutoff);
  double w = 1.0, total = 0.0;
  for (int n = 0; n < cutoff; ++n, w *= q) {
    rho(n, n) = w;
    total += w;
  }
  return rho / total;
}

// ---- Liouvillian ------------------------------------------------------------

std::vector<LindbladChannel> thermal_channels(const SystemParams& params) {
  const Occupancies n = params.occupancies();
  return {{Mode::photon, params.kappa_a, n.photon},
          {Mode::nanobeam, params.kappa_b, n.nanobeam},
          {Mode::graphene, params.kappa_c, n.graphene}};
}

SuperOperator::SuperOperator(OperatorMatrix hamiltonian, std::vector<LindbladChannel> channels)
    : hamiltonian_(std::move(hamiltonian)), channels_(std::move(channels)) {
  const HilbertDims& d = hamiltonian_.dims();
  ComplexMatrix decay = ComplexMatrix::Zero(d.total(), d.total());
  for (const auto& ch : channels_) {
    const ComplexMatrix a = mode_lowering(ch.mode, d).entries();
    const ComplexMatrix down = std::sqrt(ch.rate * (ch.occupancy + 1.0)) * a;
    jumps_.push_back(to_sparse(down));
    jump_adjoints_.push_back(to_sparse(down.adjoint()));
    decay += down.adjoint() * down;
    if (ch.occupancy > 0.0) {
      const ComplexMatrix up = std::sqrt(ch.rate * ch.occupancy) * a.adjoint();
      jumps_.push_back(to_sparse(up));
      jump_adjoints_.push_back(to_sparse(up.adjoint()));
      decay += up.adjoint() * up;
    }
  }
  const ComplexMatrix heff = Complex(0.0, -1.0) * hamiltonian_.entries() - 0.5 * decay;
  effective_ = to_sparse(heff);
  effective_adjoint_ = to_sparse(heff.adjoint());
}

ComplexMatrix SuperOperator::apply(const ComplexMatrix& rho) const {
  require_square(rho, dims(), "SuperOperator::apply");
  ComplexMatrix out = effective_ * rho;
  out.noalias() += rho * effective_adjoint_;
  ComplexMatrix jr(rho.rows(), rho.cols());
  for (std::size_t k = 0; k < jumps_.size(); ++k) {
    jr.noalias() = jumps_[k] * rho;
    out.noalias() += jr * jump_adjoints_[k];
  }
  return out;
}

SparseMatrix SuperOperator::matrix() const {
  const Eigen::Index n = static_cast<Eigen::Index>(dims().total()) * dims().total();
  const auto trips = liouvillian_triplets(*this);
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

double SuperOperator::norm_inf() const { return inf_norm(matrix()); }

double SuperOperator::norm_bound() const {
  double bound = 2.0 * inf_norm(effective_);
  for (const auto& j : jumps_) {
    const double nj = inf_norm(j);
    bound += nj * nj;
  }
  return bound;
}

SuperOperator liouvillian(const OperatorMatrix& hamiltonian, const std::vector<LindbladChannel>& channels,
                          const Tolerances& tol) {
  hamiltonian.dims().validate();
  const double scale = std::max(1.0, hamiltonian.entries().cwiseAbs().maxCoeff());
  if (hamiltonian.hermiticity_defect() > tol.operator_hermiticity * scale) {
    throw Error(ErrorKind::invalid_input, "liouvillian: Hamiltonian is not Hermitian");
  }
  if (channels.empty()) throw Error(ErrorKind::invalid_input, "liouvillian: at least one channel required");
  for (const auto& ch : channels) {
    if (!(ch.rate > 0.0) || !std::isfinite(ch.rate)) {
      throw Error(ErrorKind::invalid_input, std::string("liouvillian: ") + to_string(ch.mode) + " rate must be > 0");
    }
    if (!(ch.occupancy >= 0.0) || !std::isfinite(ch.occupancy)) {
      throw Error(ErrorKind::invalid_input,
                  std::string("liouvillian: ") + to_string(ch.mode) + " occupancy must be >= 0");
    }
  }
  return SuperOperator(hamiltonian, channels);
}

// ---- steady state ------------------------------------------------------------

SteadyStateSolution solve_steady_state(const SuperOperator& L, const SteadyStateOptions& options) {
  const int d = L.dims().total();
  const long unknowns = static_cast<long>(d) * d;
  SteadyStateMethod method = options.method;
  if (method == SteadyStateMethod::automatic) {
    method = unknowns <= options.direct_max_unknowns ? SteadyStateMethod::direct : SteadyStateMethod::krylov;
  }

  SteadyStateReport report;
  report.method = method;
  ComplexMatrix x;
  if (method == SteadyStateMethod::direct) {
    x = direct_steady_state(L);
  } else {
    auto k = gmres_steady_state(L, options);
    report.iterations = k.iterations;
    if (!all_modes_damped(L)) {
      // restart from a different point; a wider kernel shows up as a different answer
      ComplexMatrix other = ComplexMatrix::Identity(d, d);
      for (int i = 0; i < d; ++i) other(i, i) *= 1.0 + static_cast<double>(i) / d;
      auto k2 = gmres_steady_state(L, options, &other);
      report.iterations += k2.iterations;
      const Complex t1 = k.x.trace(), t2 = k2.x.trace();
      if (std::abs(t1) < 1e-300 || std::abs(t2) < 1e-300 ||
          !((k.x / t1 - k2.x / t2).cwiseAbs().maxCoeff() < 1e-6)) {
        throw Error(ErrorKind::degenerate_steady_state, "steady state: Liouvillian kernel is not one-dimensional");
      }
    }
    x = std::move(k.x);
  }
  if (!x.allFinite()) throw Error(ErrorKind::degenerate_steady_state, "steady state: non-finite solution");

  const Complex tr = x.trace();
  report.raw_trace_defect = std::abs(tr - 1.0);
  if (std::abs(tr) < 1e-300) throw Error(ErrorKind::degenerate_steady_state, "steady state: zero trace");
  report.raw_hermiticity_defect = (x - x.adjoint()).cwiseAbs().maxCoeff() / std::abs(tr);
  x /= tr;
  ComplexMatrix rho = 0.5 * (x + x.adjoint());
  rho /= rho.trace().real();

  const Tolerances& tol = options.tolerances;
  const double lnorm = L.norm_inf();
  report.residual = L.apply(rho).cwiseAbs().maxCoeff() / lnorm;
  if (!(report.residual < tol.residual)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "steady state: residual %.3e exceeds %.1e (singular or unconverged system)",
                  report.residual, tol.residual);
    throw Error(ErrorKind::degenerate_steady_state, buf);
  }

  DensityMatrix state{L.dims(), std::move(rho)};
  report.min_eigenvalue = state.min_eigenvalue();
  if (options.check_positivity && report.min_eigenvalue < -tol.positivity) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "steady state: eigenvalue %.3e below -%.1e; increase the cutoffs",
                  report.min_eigenvalue, tol.positivity);
    throw TruncationError(buf, report.min_eigenvalue);
  }
  return {std::move(state), report};
}

DensityMatrix steady_state(const SuperOperator& L, const SteadyStateOptions& options) {
  return solve_steady_state(L, options).rho;
}

DensityMatrix propagate(const DensityMatrix& rho0, const SuperOperator& L, double t_final, double dt) {
  if (!(rho0.dims == L.dims())) throw Error(ErrorKind::invalid_dimension, "propagate: dims mismatch");
  if (!(dt > 0.0) || !(t_final >= 0.0)) {
    throw Error(ErrorKind::configuration, "propagate: need dt > 0 and t_final >= 0");
  }
  if (dt * L.norm_bound() >= 0.1) {
    throw Error(ErrorKind::configuration, "propagate: dt does not resolve the fastest rate (dt * |L| >= 0.1)");
  }
  ComplexMatrix rho = rho0.entries;
  const long steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  const double h = steps > 0 ? t_final / steps : 0.0;
  for (long s = 0; s < steps; ++s) {
    const ComplexMatrix k1 = L.apply(rho);
    const ComplexMatrix k2 = L.apply(rho + 0.5 * h * k1);
    const ComplexMatrix k3 = L.apply(rho + 0.5 * h * k2);
    const ComplexMatrix k4 = L.apply(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return {rho0.dims, std::move(rho)};
}

// ---- photon statistics -------------------------------------------------------

namespace {

// photon-number distribution of the reduced cavity state
Eigen::VectorXd photon_distribution(const DensityMatrix& rho) {
  const HilbertDims& d = rho.dims;
  require_square(rho.entries, d, "photon statistics");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(d.photon);
  for (int na = 0; na < d.photon; ++na) {
    for (int nb = 0; nb < d.nanobeam; ++nb) {
      for (int nc = 0; nc < d.graphene; ++nc) {
        const int k = d.index(na, nb, nc);
        p(na) += rho.entries(k, k).real();
      }
    }
  }
  return p;
}

}  // namespace

double photon_number(const DensityMatrix& rho) {
  const Eigen::VectorXd p = photon_distribution(rho);
  double n = 0.0;
  for (int k = 0; k < p.size(); ++k) n += k * p(k);
  return n;
}

double g2_numeric(const DensityMatrix& rho, const Tolerances& tol) {
  const Eigen::VectorXd p = photon_distribution(rho);
  double n = 0.0, pairs = 0.0;
  for (int k = 0; k < p.size(); ++k) {
    n += k * p(k);
    pairs += static_cast<double>(k) * (k - 1) * p(k);
  }
  if (!(n > tol.photon_number_floor)) {
    throw Error(ErrorKind::undefined_correlation, "g2: photon number below floor");
  }
  return pairs / (n * n);
}

double g2_analytic(double detuning, double chi_t, double gamma_a) {
  const Complex num(gamma_a, 2.0 * (detuning - chi_t));
  const Complex den(gamma_a, detuning - 2.0 * chi_t);
  return 4.0 * std::norm(num) / std::norm(den);
}

double g2_analytic_flipped(double detuning, double chi_t, double gamma_a) {
  return g2_analytic(-detuning, chi_t, gamma_a);
}

double bind_gamma(const SystemParams& params, GammaBinding binding) {
  return binding == GammaBinding::kappa_a ? params.kappa_a : 0.5 * params.kappa_a;
}

BlockadePoint blockade_point(const SystemParams& params, const HilbertDims& dims, const SteadyStateOptions& options) {
  params.validate();
  dims.validate();
  const SuperOperator L = liouvillian(hamiltonian_rotating(params, dims), thermal_channels(params), options.tolerances);
  SteadyStateSolution sol = solve_steady_state(L, options);
  BlockadePoint out;
  out.n_photon = photon_number(sol.rho);
  out.g2 = g2_numeric(sol.rho, options.tolerances);
  out.report = sol.report;
  return out;
}

TruncationCheck truncation_check(const std::vector<SystemParams>& points, const std::vector<double>& g2,
                                 const HilbertDims& dims, const BlockadeScanOptions& options) {
  TruncationCheck out;
  out.report = nlohmann::json::object();
  std::vector<std::size_t> finite;
  for (std::size_t i = 0; i < g2.size(); ++i) {
    if (std::isfinite(g2[i])) finite.push_back(i);
  }
  if (finite.empty()) return out;
  auto by_g2 = [&](std::size_t a, std::size_t b) { return g2[a] < g2[b]; };
  const std::size_t lo = *std::min_element(finite.begin(), finite.end(), by_g2);
  const std::size_t hi = *std::max_element(finite.begin(), finite.end(), by_g2);
  std::vector<std::size_t> picks{lo};
  if (hi != lo) picks.push_back(hi);

  const HilbertDims bigger = dims.enlarged(options.convergence_extra);
  std::vector<BlockadePoint> check(picks.size());
  parallel_for(picks.size(), options.workers,
               [&](std::size_t k) { check[k] = blockade_point(points[picks[k]], bigger, options.solver); });
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const double ref = g2[picks[k]];
    const double change = std::abs(check[k].g2 - ref) / std::abs(ref);
    out.converged = out.converged && change < options.convergence_tolerance;
    entries.push_back({{"row", picks[k]},
                       {std::string("Delta") + hz_suffix, ordinary(points[picks[k]].detuning)},
                       {"g2", ref},
                       {"g2_enlarged", check[k].g2},
                       {"relative_change", change}});
  }
  out.report = {{"enlarged_truncation", {bigger.photon, bigger.nanobeam, bigger.graphene}},
                {"tolerance", options.convergence_tolerance},
                {"converged", out.converged},
                {"points", entries}};
  return out;
}

ScanTable blockade_scan(const SystemParams& params, const std::vector<double>& detunings, const HilbertDims& dims,
                        const BlockadeScanOptions& options) {
  params.validate();
  dims.validate();
  ScanTable table({std::string("Delta") + hz_suffix, "g2", "n_photon", "g2_analytic", "g2_analytic_flipped"});
  if (std::abs(params.drive) > 0.1 * params.kappa_a) {
    table.warn("drive |Omega| is not small against kappa_a; the weak-drive closed form does not apply");
  }
  const double chi_t = kerr(params).chi_t;
  const double gamma = bind_gamma(params, options.gamma);

  std::vector<BlockadePoint> points(detunings.size());
  parallel_for(detunings.size(), options.workers, [&](std::size_t i) {
    SystemParams p = params;
    p.detuning = detunings[i];
    try {
      points[i] = blockade_point(p, dims, options.solver);
    } catch (const TruncationError& e) {
      throw TruncationError(hz_label(detunings[i]) + ": " + e.detail(), e.eigenvalue());
    } catch (const Error& e) {
      throw Error(e.kind(), hz_label(detunings[i]) + ": " + e.detail());
    }
  });

  int max_iterations = 0;
  double max_residual = 0.0, min_eig = 0.0;
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    const double delta = detunings[i];
    table.add_row({ordinary(delta), points[i].g2, points[i].n_photon, g2_analytic(delta, chi_t, gamma),
                   g2_analytic_flipped(delta, chi_t, gamma)});
    max_iterations = std::max(max_iterations, points[i].report.iterations);
    max_residual = std::max(max_residual, points[i].report.residual);
    min_eig = std::min(min_eig, points[i].report.min_eigenvalue);
  }
  auto& meta = table.metadata();
  meta["truncation"] = {dims.photon, dims.nanobeam, dims.graphene};
  meta["gamma_a/2pi_Hz"] = ordinary(gamma);
  meta["chi_t/2pi_Hz"] = ordinary(chi_t);
  meta["solver"] = {{"max_iterations", max_iterations},
                    {"max_relative_residual", max_residual},
                    {"min_eigenvalue", min_eig}};

  if (options.convergence_check && !detunings.empty()) {
    std::vector<SystemParams> at(points.size(), params);
    std::vector<double> g2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      at[i].detuning = detunings[i];
      g2[i] = points[i].g2;
    }
    const TruncationCheck check = truncation_check(at, g2, dims, options);
    meta["convergence"] = check.report;
    if (!check.converged) table.warn("truncation convergence check failed: g2 changes by more than the tolerance");
  }
  return table;
}

}  // namespace omx2d
