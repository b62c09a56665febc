#pragma once

#include <vector>

#include "cpcone/matrix.hpp"

namespace cpcone {

/// Spectral decomposition of a Hermitian matrix. Eigenvalues ascending,
/// eigenvectors the corresponding orthonormal columns.
struct Spectrum {
  RVec eigenvalues;
  ComplexMatrix eigenvectors;

  ComplexMatrix reconstruct() const;  // V diag(lambda) V^*
};

/// Full spectral decomposition via cyclic Jacobi on the 2n x 2n real
/// symmetric embedding [[Re H, -Im H], [Im H, Re H]]. Deterministic:
/// ascending eigenvalue order, fixed orthonormalization within degenerate
/// clusters, canonical phase (largest component real positive).
Spectrum eig_hermitian(const HermitianMatrix& h);

double min_eigenvalue(const HermitianMatrix& h);
double max_eigenvalue(const HermitianMatrix& h);

/// Sum of singular values. Computed from the spectrum of A^* A.
double trace_norm(const ComplexMatrix& a);

enum class TraceSide { kFirst, kSecond };

/// Partial trace of M acting on C^{dim_a} (x) C^{dim_b}.
/// kFirst traces out the first factor (result dim_b), kSecond the second.
HermitianMatrix partial_trace(const HermitianMatrix& m, int dim_a, int dim_b, TraceSide which);
ComplexMatrix partial_trace(const ComplexMatrix& m, int dim_a, int dim_b, TraceSide which);

/// Column-by-column matricization: v of length rows*cols, column i of the
/// result is v[i*rows .. i*rows+rows).
ComplexMatrix vec_mat(const CVec& v, int rows, int cols);
CVec mat_vec(const ComplexMatrix& m);

// Real symmetric Jacobi eigensolver used by the embedding above and by the
// conic solver. a is n x n row-major symmetric; outputs ascending
// eigenvalues and the orthogonal eigenvector matrix (columns).
void jacobi_eig_symmetric(int n, const RVec& a, RVec& eigenvalues, RVec& eigenvectors);

}  // namespace cpcone
