#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "omx2d/fockspace.hpp"
#include "omx2d/model.hpp"
#include "omx2d/scan_table.hpp"
#include "omx2d/tolerances.hpp"

namespace omx2d {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// Density operator on the truncated space.
struct DensityMatrix {
  HilbertDims dims;
  ComplexMatrix entries;

  Complex trace() const { return entries.trace(); }
  double hermiticity_defect() const;
  double min_eigenvalue() const;
  /// Tr(rho X).
  Complex expectation(const OperatorMatrix& op) const { return op.expectation(entries); }

  static DensityMatrix pure(const HilbertDims& dims, const ComplexVector& psi);
  /// rho_photon (x) rho_nanobeam (x) rho_graphene.
  static DensityMatrix product(const ComplexMatrix& photon, const ComplexMatrix& nanobeam,
                               const ComplexMatrix& graphene);
};

/// Single-mode state helpers (cutoff-sized matrices).
ComplexMatrix fock_projector(int n, int cutoff);
ComplexVector coherent_amplitudes(Complex alpha, int cutoff);
ComplexMatrix thermal_state(double mean_occupancy, int cutoff);

/// Dissipator of one mode: rate*(n+1) D[o] + rate*n D[o^dag].
struct LindbladChannel {
  Mode mode = Mode::photon;
  double rate = 0.0;
  double occupancy = 0.0;
};

/// The three thermal channels implied by the params (kappa_o, n_o^T).
std::vector<LindbladChannel> thermal_channels(const SystemParams& params);

/// Generator of the master equation, dρ/dt = L ρ.
///
/// Stored in Lindblad form (Hamiltonian plus jump operators). The D^2 x D^2
/// matrix acting on column-stacked vec(ρ) is assembled on request.
class SuperOperator {
 public:
  SuperOperator(OperatorMatrix hamiltonian, std::vector<LindbladChannel> channels);

  const HilbertDims& dims() const { return hamiltonian_.dims(); }
  const OperatorMatrix& hamiltonian() const { return hamiltonian_; }
  const std::vector<LindbladChannel>& channels() const { return channels_; }
  const std::vector<SparseMatrix>& jumps() const { return jumps_; }
  /// H_eff = -i H - 1/2 sum_k J_k^dag J_k, so that L ρ = H_eff ρ + ρ H_eff^dag + sum_k J_k ρ J_k^dag.
  const SparseMatrix& effective_hamiltonian() const { return effective_; }

  ComplexMatrix apply(const ComplexMatrix& rho) const;
  SparseMatrix matrix() const;
  /// Exact ||L||_inf of the assembled matrix.
  double norm_inf() const;
  /// Cheap upper bound on the spectral radius: 2 ||H_eff||_inf + sum ||J||_inf^2.
  double norm_bound() const;

 private:
  OperatorMatrix hamiltonian_;
  std::vector<LindbladChannel> channels_;
  std::vector<SparseMatrix> jumps_, jump_adjoints_;
  SparseMatrix effective_, effective_adjoint_;
};

/// Validated constructor: H must be Hermitian and channels nonempty with
/// positive rates and nonnegative occupancies.
SuperOperator liouvillian(const OperatorMatrix& hamiltonian,
                          const std::vector<LindbladChannel>& channels,
                          const Tolerances& tol = {});

enum class SteadyStateMethod { automatic, direct, krylov };

struct SteadyStateOptions {
  SteadyStateMethod method = SteadyStateMethod::automatic;
  /// automatic picks the sparse direct solve up to this many unknowns (D^2).
  int direct_max_unknowns = 4096;
  double krylov_tolerance = 1e-13;  // relative to ||L|| ||rho||
  int krylov_restart = 160;
  int krylov_max_iterations = 4000;
  /// Slow block of the preconditioner: Bohr frequencies within this multiple of
  /// the largest dissipation rate, at most this many matrix entries.
  double coarse_window = 1.0;
  int coarse_max_block = 5000;
  bool check_positivity = true;
  Tolerances tolerances;
};

struct SteadyStateReport {
  SteadyStateMethod method = SteadyStateMethod::direct;
  int iterations = 0;
  double residual = 0.0;  // ||L rho||_max / ||L||_inf
  double raw_hermiticity_defect = 0.0;
  double raw_trace_defect = 0.0;
  double min_eigenvalue = 0.0;
};

struct SteadyStateSolution {
  DensityMatrix rho;
  SteadyStateReport report;
};

/// Stationary state of L with unit trace.
///
/// Small systems: sparse LU on L with its first row replaced by the trace
/// functional. Large systems: GMRES on L + V Tr(.) = V, right-preconditioned
/// with the inverse of ρ -> H_eff ρ + ρ H_eff^dag (Bartels-Stewart on the
/// Schur form of H_eff) plus an exact solve on the slow, near-degenerate
/// entries of that basis.
SteadyStateSolution solve_steady_state(const SuperOperator& L, const SteadyStateOptions& options = {});
DensityMatrix steady_state(const SuperOperator& L, const SteadyStateOptions& options = {});

/// Fixed-step RK4 integration of dρ/dt = L ρ up to t_final.
/// Requires dt * norm_bound() < 0.1.
DensityMatrix propagate(const DensityMatrix& rho0, const SuperOperator& L, double t_final, double dt);

/// Tr(ρ a^dag^2 a^2) / Tr(ρ a^dag a)^2.
double g2_numeric(const DensityMatrix& rho, const Tolerances& tol = {});
double photon_number(const DensityMatrix& rho);

/// Weak-drive closed form for g2(0), evaluated exactly as printed:
///   4 |gamma + 2i(Delta - chi_t)|^2 / |gamma + i(Delta - 2 chi_t)|^2.
/// This expression is not the coherent-state value 1 at chi_t = 0; it is kept
/// for comparison with the master-equation result.
double g2_analytic(double detuning, double chi_t, double gamma_a);
/// The same expression evaluated at -Delta, which places the dip at
/// Delta = -chi_t like the numerics.
double g2_analytic_flipped(double detuning, double chi_t, double gamma_a);

enum class GammaBinding { kappa_a, half_kappa_a };
double bind_gamma(const SystemParams& params, GammaBinding binding);

struct BlockadePoint {
  double g2 = 0.0;
  double n_photon = 0.0;
  SteadyStateReport report;
};

/// Steady state at the given params followed by g2 and <a^dag a>.
BlockadePoint blockade_point(const SystemParams& params, const HilbertDims& dims,
                             const SteadyStateOptions& options = {});

struct BlockadeScanOptions {
  SteadyStateOptions solver;
  GammaBinding gamma = GammaBinding::kappa_a;
  /// Re-solve at the scan's g2 minimum and maximum with every cutoff + 2.
  bool convergence_check = false;
  int convergence_extra = 2;
  double convergence_tolerance = 0.01;
  int workers = 1;
};

struct TruncationCheck {
  bool converged = true;
  nlohmann::json report;
};

/// Re-solves the g2 minimum and maximum among `points` with every cutoff
/// raised by options.convergence_extra and compares g2. Non-finite g2 entries
/// are skipped.
TruncationCheck truncation_check(const std::vector<SystemParams>& points, const std::vector<double>& g2,
                                 const HilbertDims& dims, const BlockadeScanOptions& options);

/// g2(0) and photon number over a detuning grid (rad/s). Columns:
/// Delta/2pi_Hz, g2, n_photon, g2_analytic, g2_analytic_flipped.
ScanTable blockade_scan(const SystemParams& params, const std::vector<double>& detunings,
                        const HilbertDims& dims, const BlockadeScanOptions& options = {});

}  // namespace omx2d
