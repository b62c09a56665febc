#include <cmath>

#include "cpcone/linalg.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cpcone;
using testutil::rng;

namespace {

HermitianMatrix horn_w1() {
  RVec e(25, 0.0);
  const double row[5] = {1, -1, 1, 1, -1};
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 5; ++k) e[static_cast<size_t>(i) * 5 + (i + k) % 5] = row[k];
  return HermitianMatrix(ComplexMatrix::from_real(5, 5, e));
}

}  // namespace

TEST_CASE("eig_hermitian: identity and diagonal") {
  auto sp = eig_hermitian(HermitianMatrix(ComplexMatrix::identity(2)));
  CHECK(sp.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));

  // Pauli Z
  ComplexMatrix z(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  auto spz = eig_hermitian(HermitianMatrix(z));
  CHECK(spz.eigenvalues[0] == doctest::Approx(-1.0));
  CHECK(spz.eigenvalues[1] == doctest::Approx(1.0));
}

TEST_CASE("eig_hermitian: Horn matrix spectral radius is sqrt(5)+1") {
  auto sp = eig_hermitian(horn_w1());
  CHECK(sp.eigenvalues.back() == doctest::Approx(std::sqrt(5.0) + 1.0).epsilon(1e-10));
}

TEST_CASE("eig_hermitian: reconstruction and orthonormality on random inputs") {
  auto g = rng(7001);
  for (int n : {1, 2, 3, 5, 8, 17, 33, 60}) {
    auto h = testutil::random_hermitian(n, g);
    auto sp = eig_hermitian(h);
    const double scale = 1.0 + h.frobenius_norm();
    CHECK((sp.reconstruct() - h.mat()).frobenius_norm() <= 1e-10 * scale);
    const ComplexMatrix vtv = sp.eigenvectors.dagger() * sp.eigenvectors;
    CHECK((vtv - ComplexMatrix::identity(n)).frobenius_norm() <= 1e-10);
    for (size_t i = 1; i < sp.eigenvalues.size(); ++i) CHECK(sp.eigenvalues[i - 1] <= sp.eigenvalues[i] + 1e-12);
  }
}

TEST_CASE("eig_hermitian: degenerate spectra are handled") {
  auto g = rng(7002);
  // projector with repeated eigenvalues 0,0,1,1
  auto u = testutil::random_unitary(4, g);
  ComplexMatrix d(4, 4);
  d(0, 0) = d(1, 1) = 1.0;
  auto h = HermitianMatrix(u * d * u.dagger());
  auto sp = eig_hermitian(h);
  CHECK((sp.reconstruct() - h.mat()).frobenius_norm() <= 1e-10 * 3.0);
  CHECK(sp.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(sp.eigenvalues[3] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("trace_norm: frozen small cases") {
  CHECK(trace_norm(ComplexMatrix(3, 3)) == doctest::Approx(0.0));
  ComplexMatrix d(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -2.0;
  CHECK(trace_norm(d) == doctest::Approx(3.0).epsilon(1e-10));
  // qubit off-diagonal difference with rho_12 = -1/2: singular values 1/2, 1/2
  ComplexMatrix a(2, 2);
  a(0, 1) = -0.5;
  a(1, 0) = -0.5;
  CHECK(trace_norm(a) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("trace_norm: adjoint and unitary invariance") {
  auto g = rng(7003);
  for (int t = 0; t < 20; ++t) {
    auto a = testutil::random_complex(4, 4, g);
    CHECK(trace_norm(a) == doctest::Approx(trace_norm(a.dagger())).epsilon(1e-8));
    auto u = testutil::random_unitary(4, g);
    auto v = testutil::random_unitary(4, g);
    CHECK(trace_norm(u * a * v) == doctest::Approx(trace_norm(a)).epsilon(1e-8));
  }
}

TEST_CASE("partial_trace: product inputs and bell state") {
  auto g = rng(7004);
  auto rho = testutil::random_density(3, g);
  auto big = HermitianMatrix(kron(ComplexMatrix::identity(2), rho.mat()));
  auto tr1 = partial_trace(big, 2, 3, TraceSide::kFirst);
  CHECK((tr1.mat() - 2.0 * rho.mat()).frobenius_norm() <= 1e-12);

  // Tr_2(J) = I for the identity channel Choi (trace-preserving)
  ComplexMatrix j(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) j(i * 2 + i, k * 2 + k) = 1.0;
  auto tr2 = partial_trace(HermitianMatrix(j), 2, 2, TraceSide::kSecond);
  CHECK((tr2.mat() - ComplexMatrix::identity(2)).frobenius_norm() <= 1e-12);

  // bell state: expanded outer product traced down to I/2
  CVec bell = {cxd(1 / std::sqrt(2.0), 0), 0.0, 0.0, cxd(1 / std::sqrt(2.0), 0)};
  auto bb = HermitianMatrix(ComplexMatrix::outer(bell, bell));
  auto red = partial_trace(bb, 2, 2, TraceSide::kFirst);
  CHECK((red.mat() - 0.5 * ComplexMatrix::identity(2)).frobenius_norm() <= 1e-12);
}

TEST_CASE("partial_trace: linearity and kron adjointness") {
  auto g = rng(7005);
  for (int t = 0; t < 10; ++t) {
    auto m = testutil::random_hermitian(6, g);
    auto n = testutil::random_hermitian(6, g);
    const double al = testutil::gauss(g), be = testutil::gauss(g);
    auto lhs = partial_trace(al * m.mat() + be * n.mat(), 2, 3, TraceSide::kFirst);
    auto rhs = al * partial_trace(m.mat(), 2, 3, TraceSide::kFirst) + be * partial_trace(n.mat(), 2, 3, TraceSide::kFirst);
    CHECK((lhs - rhs).frobenius_norm() <= 1e-12 * (1.0 + lhs.frobenius_norm()));

    auto a = testutil::random_complex(2, 2, g);
    auto big = kron(a, ComplexMatrix::identity(3)) * m.mat();
    const cxd lhs2 = trace(big);
    const cxd rhs2 = trace(a * partial_trace(m.mat(), 2, 3, TraceSide::kSecond));
    CHECK(std::abs(lhs2 - rhs2) <= 1e-10 * (1.0 + std::abs(lhs2)));
  }
}

TEST_CASE("vec_mat: convention and round trip") {
  CVec v = {1.0, 2.0, 3.0, 4.0};
  auto m = vec_mat(v, 2, 2);
  CHECK(m(0, 0).real() == doctest::Approx(1.0));
  CHECK(m(1, 0).real() == doctest::Approx(2.0));
  CHECK(m(0, 1).real() == doctest::Approx(3.0));
  CHECK(m(1, 1).real() == doctest::Approx(4.0));

  CVec e2(6, 0.0);
  e2[2] = 1.0;
  auto me = vec_mat(e2, 3, 2);
  CHECK(me(2, 0).real() == doctest::Approx(1.0));
  CHECK(me.frobenius_norm() == doctest::Approx(1.0));

  auto g = rng(7006);
  auto r = testutil::random_complex(3, 2, g);
  auto back = vec_mat(mat_vec(r), 3, 2);
  CHECK((back - r).frobenius_norm() == doctest::Approx(0.0));
}

TEST_CASE("hermitian validation rejects non-hermitian input") {
  ComplexMatrix m(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 2.0;
  CHECK_THROWS_AS(HermitianMatrix{m}, NonHermitian);
  ComplexMatrix d(2, 2);
  d(0, 0) = cxd(1.0, 0.5);
  d(1, 1) = 1.0;
  CHECK_THROWS_AS(HermitianMatrix{d}, NonHermitian);
}
