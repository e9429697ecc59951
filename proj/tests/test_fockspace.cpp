#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>

#include "omx2d/errors.hpp"
#include "omx2d/fockspace.hpp"

using namespace omx2d;

namespace {

// Kronecker product written out by index, independent of embed().
ComplexMatrix kron3(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& c) {
  const int na = a.rows(), nb = b.rows(), nc = c.rows();
  ComplexMatrix out = ComplexMatrix::Zero(na * nb * nc, na * nb * nc);
  for (int i1 = 0; i1 < na; ++i1)
    for (int j1 = 0; j1 < na; ++j1)
      for (int i2 = 0; i2 < nb; ++i2)
        for (int j2 = 0; j2 < nb; ++j2)
          for (int i3 = 0; i3 < nc; ++i3)
            for (int j3 = 0; j3 < nc; ++j3)
              out((i1 * nb + i2) * nc + i3, (j1 * nb + j2) * nc + j3) = a(i1, j1) * b(i2, j2) * c(i3, j3);
  return out;
}

ComplexMatrix random_matrix(int n, std::mt19937& rng) {
  std::normal_distribution<double> d;
  ComplexMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(d(rng), d(rng));
  return m;
}

}  // namespace

TEST_CASE("lowering operator ladder") {
  const ComplexMatrix a2 = lowering(2);
  CHECK(a2(0, 1) == Complex(1.0));
  CHECK(a2(0, 0) == Complex(0.0));
  CHECK(a2(1, 0) == Complex(0.0));
  CHECK(a2(1, 1) == Complex(0.0));

  const ComplexMatrix a3 = lowering(3);
  CHECK(a3(0, 1) == Complex(1.0));
  CHECK(a3(1, 2).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK((a3.array().abs() > 0).count() == 2);

  CHECK_THROWS_AS(lowering(0), Error);
  try {
    lowering(0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_dimension);
  }
}

TEST_CASE("truncated commutator is identity minus N|N-1><N-1|") {
  for (int n : {1, 2, 3, 7}) {
    const ComplexMatrix a = lowering(n);
    const ComplexMatrix comm = a * a.adjoint() - a.adjoint() * a;
    ComplexMatrix expected = ComplexMatrix::Identity(n, n);
    expected(n - 1, n - 1) -= double(n);
    CHECK((comm - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
  const ComplexMatrix a = lowering(3);
  const ComplexMatrix comm = a * a.adjoint() - a.adjoint() * a;
  CHECK(comm(0, 0).real() == doctest::Approx(1.0));
  CHECK(comm(1, 1).real() == doctest::Approx(1.0));
  CHECK(comm(2, 2).real() == doctest::Approx(-2.0));
}

TEST_CASE("basis ordering is photon, nanobeam, graphene") {
  const HilbertDims d{2, 3, 4};
  CHECK(d.total() == 24);
  CHECK(d.index(0, 0, 1) == 1);
  CHECK(d.index(0, 1, 0) == 4);
  CHECK(d.index(1, 0, 0) == 12);
  CHECK(d.index(1, 2, 3) == 23);
}

TEST_CASE("embed matches an explicit Kronecker product") {
  std::mt19937 rng(7);
  const HilbertDims d{2, 3, 2};
  const ComplexMatrix i2 = ComplexMatrix::Identity(2, 2), i3 = ComplexMatrix::Identity(3, 3);
  const ComplexMatrix xa = random_matrix(2, rng), xb = random_matrix(3, rng), xc = random_matrix(2, rng);
  CHECK((embed(xa, Mode::photon, d).entries() - kron3(xa, i3, i2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((embed(xb, Mode::nanobeam, d).entries() - kron3(i2, xb, i2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((embed(xc, Mode::graphene, d).entries() - kron3(i2, i3, xc)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("embedded photon lowering maps |1,0,0> to |0,0,0>") {
  const HilbertDims d{2, 2, 2};
  const OperatorMatrix a = embed(lowering(2), Mode::photon, d);
  ComplexVector psi = ComplexVector::Zero(d.total());
  psi(d.index(1, 0, 0)) = 1.0;
  const ComplexVector out = a.entries() * psi;
  ComplexVector expected = ComplexVector::Zero(d.total());
  expected(d.index(0, 0, 0)) = 1.0;
  CHECK((out - expected).norm() < 1e-15);
}

TEST_CASE("embedding the identity gives the identity") {
  const HilbertDims d{3, 2, 4};
  const OperatorMatrix id = embed(ComplexMatrix::Identity(2, 2), Mode::nanobeam, d);
  CHECK((id.entries() - ComplexMatrix::Identity(24, 24)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((OperatorMatrix::identity(d).entries() - id.entries()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("operators on different modes commute") {
  for (HilbertDims d : {HilbertDims{2, 2, 2}, HilbertDims{3, 4, 2}, HilbertDims{1, 3, 3}}) {
    const OperatorMatrix b = mode_lowering(Mode::nanobeam, d), c = mode_lowering(Mode::graphene, d);
    CHECK(commutator(b, c).entries().cwiseAbs().maxCoeff() < 1e-14);
    CHECK(commutator(adjoint(b), c).entries().cwiseAbs().maxCoeff() < 1e-14);
    const OperatorMatrix a = mode_lowering(Mode::photon, d);
    CHECK(commutator(a, adjoint(c)).entries().cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("embed rejects a dimension mismatch") {
  const HilbertDims d{2, 3, 2};
  CHECK_THROWS_AS(embed(lowering(3), Mode::photon, d), Error);
  CHECK_THROWS_AS(embed(lowering(2), Mode::nanobeam, d), Error);
  CHECK_THROWS_AS(compose(OperatorMatrix::identity({2, 2, 2}), OperatorMatrix::identity(d)), Error);
  CHECK_THROWS_AS(HilbertDims({0, 1, 1}).validate(), Error);
}

TEST_CASE("adjoint and compose") {
  std::mt19937 rng(3);
  const HilbertDims d{2, 2, 3};
  const OperatorMatrix x(d, random_matrix(d.total(), rng));
  CHECK((adjoint(adjoint(x)).entries() - x.entries()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((compose(OperatorMatrix::identity(d), x).entries() - x.entries()).cwiseAbs().maxCoeff() < 1e-15);
  const OperatorMatrix y(d, random_matrix(d.total(), rng));
  CHECK((compose(x, y).entries() - x.entries() * y.entries()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((adjoint(x).entries() - x.entries().adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("number operators are Hermitian with integer spectra") {
  const HilbertDims d{4, 3, 2};
  for (Mode m : {Mode::photon, Mode::nanobeam, Mode::graphene}) {
    const OperatorMatrix a = mode_lowering(m, d);
    const OperatorMatrix n = compose(adjoint(a), a);
    CHECK(n.hermiticity_defect() == 0.0);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(n.entries());
    const int cutoff = d.cutoff(m);
    const int multiplicity = d.total() / cutoff;
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + d.total());
    std::sort(ev.begin(), ev.end());
    for (int k = 0; k < d.total(); ++k) CHECK(ev[k] == doctest::Approx(double(k / multiplicity)).epsilon(1e-12));
  }
  // single-mode number operator: eigenvalues 0..N-1
  const ComplexMatrix a = lowering(5);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.adjoint() * a);
  for (int k = 0; k < 5; ++k) CHECK(es.eigenvalues()(k) == doctest::Approx(double(k)).epsilon(1e-12));
}

TEST_CASE("embed preserves spectra with multiplicity D / cutoff") {
  std::mt19937 rng(11);
  const HilbertDims d{2, 3, 2};
  ComplexMatrix h = random_matrix(3, rng);
  h = (h + h.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> single(h);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> full(embed(h, Mode::nanobeam, d).entries());
  std::vector<double> expected;
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < d.total() / 3; ++r) expected.push_back(single.eigenvalues()(k));
  std::sort(expected.begin(), expected.end());
  for (int k = 0; k < d.total(); ++k) CHECK(full.eigenvalues()(k) == doctest::Approx(expected[k]).epsilon(1e-12));
}
