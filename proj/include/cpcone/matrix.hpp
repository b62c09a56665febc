#pragma once

#include <complex>
#include <vector>

#include "cpcone/errors.hpp"

namespace cpcone {

using cxd = std::complex<double>;
using CVec = std::vector<cxd>;
using RVec = std::vector<double>;

/// Dense complex matrix, row-major storage.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(int rows, int cols);
  ComplexMatrix(int rows, int cols, CVec entries);

  static ComplexMatrix identity(int n);
  static ComplexMatrix zero(int rows, int cols) { return ComplexMatrix(rows, cols); }
  static ComplexMatrix from_real(int rows, int cols, const RVec& entries);
  static ComplexMatrix outer(const CVec& u, const CVec& v);  // u v^*
  static ComplexMatrix diag(const RVec& d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  cxd& operator()(int r, int c) { return e_[static_cast<size_t>(r) * cols_ + c]; }
  const cxd& operator()(int r, int c) const { return e_[static_cast<size_t>(r) * cols_ + c]; }

  const CVec& data() const { return e_; }
  CVec& data() { return e_; }

  ComplexMatrix dagger() const;     // conjugate transpose
  ComplexMatrix transpose() const;
  ComplexMatrix conjugate() const;
  ComplexMatrix real_part() const;  // entrywise Re, as a complex matrix
  ComplexMatrix imag_part() const;  // entrywise Im, as a complex matrix

  ComplexMatrix operator+(const ComplexMatrix& o) const;
  ComplexMatrix operator-(const ComplexMatrix& o) const;
  ComplexMatrix operator*(const ComplexMatrix& o) const;
  CVec operator*(const CVec& v) const;
  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);

  friend ComplexMatrix operator*(cxd a, const ComplexMatrix& m);
  friend ComplexMatrix operator*(double a, const ComplexMatrix& m);

  double frobenius_norm() const;
  double max_abs() const;
  bool all_finite() const;
  bool is_zero(double tol) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  CVec e_;
};

cxd trace(const ComplexMatrix& m);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
cxd inner(const CVec& u, const CVec& v);  // <u|v> = sum conj(u_i) v_i
double norm2(const CVec& v);

/// Hermitian matrix: validated and exactly symmetrized at construction.
/// The Hermiticity tolerance is 1e-12 * (1 + max |entry|).
class HermitianMatrix {
 public:
  explicit HermitianMatrix(ComplexMatrix m);
  static HermitianMatrix from_real_symmetric(const ComplexMatrix& m);

  int dim() const { return mat_.rows(); }
  const ComplexMatrix& mat() const { return mat_; }
  const cxd& operator()(int r, int c) const { return mat_(r, c); }

  double frobenius_norm() const { return mat_.frobenius_norm(); }
  double trace_real() const;

 private:
  ComplexMatrix mat_;
};

}  // namespace cpcone
