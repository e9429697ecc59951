#pragma once

#include <Eigen/Dense>
#include <complex>

namespace omx2d {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

enum class Mode { photon, nanobeam, graphene };

const char* to_string(Mode mode);

/// Fock-space cutoffs. Cutoff n keeps levels 0..n-1.
///
/// The tensor ordering is fixed to photon (x) nanobeam (x) graphene, so the
/// basis state |n_a n_b n_c> sits at index (n_a * nanobeam + n_b) * graphene + n_c.
struct HilbertDims {
  int photon = 1;
  int nanobeam = 1;
  int graphene = 1;

  int total() const { return photon * nanobeam * graphene; }
  int cutoff(Mode mode) const;
  int index(int n_a, int n_b, int n_c) const {
    return (n_a * nanobeam + n_b) * graphene + n_c;
  }
  /// Throws invalid-dimension when any cutoff is < 1.
  void validate() const;
  /// Every cutoff increased by `extra`.
  HilbertDims enlarged(int extra) const {
    return {photon + extra, nanobeam + extra, graphene + extra};
  }

  friend bool operator==(const HilbertDims&, const HilbertDims&) = default;
};

/// Operator on the full truncated three-mode space.
class OperatorMatrix {
 public:
  OperatorMatrix(HilbertDims dims, ComplexMatrix entries);

  static OperatorMatrix zero(HilbertDims dims);
  static OperatorMatrix identity(HilbertDims dims);

  const HilbertDims& dims() const { return dims_; }
  const ComplexMatrix& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.rows()); }

  /// max |X - X^dagger| entrywise.
  double hermiticity_defect() const;
  /// Tr(rho X) for a matrix of the same size.
  Complex expectation(const ComplexMatrix& rho) const;

  OperatorMatrix& operator+=(const OperatorMatrix& rhs);
  OperatorMatrix& operator-=(const OperatorMatrix& rhs);
  OperatorMatrix& operator*=(Complex s);

  friend OperatorMatrix operator+(OperatorMatrix lhs, const OperatorMatrix& rhs) { return lhs += rhs; }
  friend OperatorMatrix operator-(OperatorMatrix lhs, const OperatorMatrix& rhs) { return lhs -= rhs; }
  friend OperatorMatrix operator*(Complex s, OperatorMatrix op) { return op *= s; }
  friend OperatorMatrix operator*(OperatorMatrix op, Complex s) { return op *= s; }
  friend OperatorMatrix operator*(const OperatorMatrix& lhs, const OperatorMatrix& rhs);

 private:
  HilbertDims dims_;
  ComplexMatrix entries_;
};

/// Single-mode bosonic lowering operator: sqrt(n) at (n-1, n).
ComplexMatrix lowering(int cutoff);

/// Kronecker embedding of a single-mode operator with identities on the
/// other two modes.
OperatorMatrix embed(const ComplexMatrix& op, Mode mode, const HilbertDims& dims);

/// Lowering operator of `mode` already embedded in the full space.
OperatorMatrix mode_lowering(Mode mode, const HilbertDims& dims);

OperatorMatrix adjoint(const OperatorMatrix& op);
OperatorMatrix compose(const OperatorMatrix& lhs, const OperatorMatrix& rhs);
OperatorMatrix commutator(const OperatorMatrix& lhs, const OperatorMatrix& rhs);

}  // namespace omx2d
