#include "omx2d/fockspace.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>

#include "omx2d/errors.hpp"

namespace omx2d {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::photon: return "photon";
    case Mode::nanobeam: return "nanobeam";
    case Mode::graphene: return "graphene";
  }
  return "unknown";
}

int HilbertDims::cutoff(Mode mode) const {
  switch (mode) {
    case Mode::photon: return photon;
    case Mode::nanobeam: return nanobeam;
    case Mode::graphene: return graphene;
  }
  return 0;
}

void HilbertDims::validate() const {
  if (photon < 1 || nanobeam < 1 || graphene < 1) {
    throw Error(ErrorKind::invalid_dimension,
                "cutoffs must be >= 1, got (" + std::to_string(photon) + ", " +
                    std::to_string(nanobeam) + ", " + std::to_string(graphene) + ")");
  }
}

namespace {

void require_same_dims(const HilbertDims& a, const HilbertDims& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::invalid_dimension, std::string(what) + ": operand dimensions differ");
  }
}

}  // namespace

OperatorMatrix::OperatorMatrix(HilbertDims dims, ComplexMatrix entries)
    : dims_(dims), entries_(std::move(entries)) {
  dims_.validate();
  if (entries_.rows() != dims_.total() || entries_.cols() != dims_.total()) {
    throw Error(ErrorKind::invalid_dimension,
                "operator is " + std::to_string(entries_.rows()) + "x" +
                    std::to_string(entries_.cols()) + " but the space has dimension " +
                    std::to_string(dims_.total()));
  }
}

OperatorMatrix OperatorMatrix::zero(HilbertDims dims) {
  dims.validate();
  return {dims, ComplexMatrix::Zero(dims.total(), dims.total())};
}

OperatorMatrix OperatorMatrix::identity(HilbertDims dims) {
  dims.validate();
  return {dims, ComplexMatrix::Identity(dims.total(), dims.total())};
}

double OperatorMatrix::hermiticity_defect() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

Complex OperatorMatrix::expectation(const ComplexMatrix& rho) const {
  // Tr(rho X) = sum_ij rho_ij X_ji
  return (rho.array() * entries_.transpose().array()).sum();
}

OperatorMatrix& OperatorMatrix::operator+=(const OperatorMatrix& rhs) {
  require_same_dims(dims_, rhs.dims_, "operator +");
  entries_ += rhs.entries_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator-=(const OperatorMatrix& rhs) {
  require_same_dims(dims_, rhs.dims_, "operator -");
  entries_ -= rhs.entries_;
  return *this;
}

OperatorMatrix& OperatorMatrix::operator*=(Complex s) {
  entries_ *= s;
  return *this;
}

OperatorMatrix operator*(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
  return compose(lhs, rhs);
}

ComplexMatrix lowering(int cutoff) {
  if (cutoff < 1) {
    throw Error(ErrorKind::invalid_dimension, "lowering: cutoff must be >= 1");
  }
  ComplexMatrix a = ComplexMatrix::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

OperatorMatrix embed(const ComplexMatrix& op, Mode mode, const HilbertDims& dims) {
  dims.validate();
  const int n = dims.cutoff(mode);
  if (op.rows() != n || op.cols() != n) {
    throw Error(ErrorKind::invalid_dimension,
                std::string("embed: operator size does not match the ") + to_string(mode) +
                    " cutoff " + std::to_string(n));
  }
  const ComplexMatrix ia = ComplexMatrix::Identity(dims.photon, dims.photon);
  const ComplexMatrix ib = ComplexMatrix::Identity(dims.nanobeam, dims.nanobeam);
  const ComplexMatrix ic = ComplexMatrix::Identity(dims.graphene, dims.graphene);
  ComplexMatrix full;
  switch (mode) {
    case Mode::photon: full = Eigen::kroneckerProduct(op, Eigen::kroneckerProduct(ib, ic).eval()); break;
    case Mode::nanobeam: full = Eigen::kroneckerProduct(ia, Eigen::kroneckerProduct(op, ic).eval()); break;
    case Mode::graphene: full = Eigen::kroneckerProduct(ia, Eigen::kroneckerProduct(ib, op).eval()); break;
  }
  return {dims, std::move(full)};
}

OperatorMatrix mode_lowering(Mode mode, const HilbertDims& dims) {
  return embed(lowering(dims.cutoff(mode)), mode, dims);
}

OperatorMatrix adjoint(const OperatorMatrix& op) {
  return {op.dims(), op.entries().adjoint()};
}

OperatorMatrix compose(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
  require_same_dims(lhs.dims(), rhs.dims(), "compose");
  return {lhs.dims(), lhs.entries() * rhs.entries()};
}

OperatorMatrix commutator(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
  return compose(lhs, rhs) - compose(rhs, lhs);
}

}  // namespace omx2d
