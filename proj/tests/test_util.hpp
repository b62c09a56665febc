#pragma once

#include <random>

#include "cpcone/linalg.hpp"
#include "cpcone/matrix.hpp"

namespace testutil {

using cpcone::ComplexMatrix;
using cpcone::CVec;
using cpcone::cxd;
using cpcone::HermitianMatrix;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double unif(std::mt19937_64& g) { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }
inline double gauss(std::mt19937_64& g) { return std::normal_distribution<double>(0.0, 1.0)(g); }

inline ComplexMatrix random_complex(int r, int c, std::mt19937_64& g) {
  ComplexMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cxd(gauss(g), gauss(g));
  return m;
}

inline HermitianMatrix random_hermitian(int n, std::mt19937_64& g) {
  ComplexMatrix a = random_complex(n, n, g);
  return HermitianMatrix(0.5 * (a + a.dagger()));
}

inline HermitianMatrix random_density(int n, std::mt19937_64& g) {
  ComplexMatrix a = random_complex(n, n, g);
  ComplexMatrix m = a * a.dagger();
  const double t = cpcone::trace(m).real();
  return HermitianMatrix((1.0 / t) * m);
}

inline ComplexMatrix random_unitary(int n, std::mt19937_64& g) {
  ComplexMatrix a = random_complex(n, n, g);
  // Gram-Schmidt on columns
  for (int j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        cxd ip(0.0, 0.0);
        for (int i = 0; i < n; ++i) ip += std::conj(a(i, k)) * a(i, j);
        for (int i = 0; i < n; ++i) a(i, j) -= ip * a(i, k);
      }
    }
    double nn = 0.0;
    for (int i = 0; i < n; ++i) nn += std::norm(a(i, j));
    nn = std::sqrt(nn);
    for (int i = 0; i < n; ++i) a(i, j) /= nn;
  }
  return a;
}

inline CVec random_unit_vector(int n, std::mt19937_64& g) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = cxd(gauss(g), gauss(g));
  const double nn = cpcone::norm2(v);
  for (auto& x : v) x /= nn;
  return v;
}

}  // namespace testutil
