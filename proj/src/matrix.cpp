#include "cpcone/matrix.hpp"

#include <cmath>

namespace cpcone {

ComplexMatrix::ComplexMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw DimensionMismatch("negative matrix dimension");
  e_.assign(static_cast<size_t>(rows) * cols, cxd(0.0, 0.0));
}

ComplexMatrix::ComplexMatrix(int rows, int cols, CVec entries) : rows_(rows), cols_(cols), e_(std::move(entries)) {
  if (e_.size() != static_cast<size_t>(rows) * cols) throw DimensionMismatch("entry count != rows*cols");
}

ComplexMatrix ComplexMatrix::identity(int n) {
  ComplexMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::from_real(int rows, int cols, const RVec& entries) {
  if (entries.size() != static_cast<size_t>(rows) * cols) throw DimensionMismatch("entry count != rows*cols");
  ComplexMatrix m(rows, cols);
  for (size_t k = 0; k < entries.size(); ++k) m.e_[k] = cxd(entries[k], 0.0);
  return m;
}

ComplexMatrix ComplexMatrix::outer(const CVec& u, const CVec& v) {
  ComplexMatrix m(static_cast<int>(u.size()), static_cast<int>(v.size()));
  for (size_t i = 0; i < u.size(); ++i)
    for (size_t j = 0; j < v.size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = u[i] * std::conj(v[j]);
  return m;
}

ComplexMatrix ComplexMatrix::diag(const RVec& d) {
  ComplexMatrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
  return m;
}

ComplexMatrix ComplexMatrix::dagger() const {
  ComplexMatrix m(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
  return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix m(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(c, r) = (*this)(r, c);
  return m;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix m(rows_, cols_);
  for (size_t k = 0; k < e_.size(); ++k) m.e_[k] = std::conj(e_[k]);
  return m;
}

ComplexMatrix ComplexMatrix::real_part() const {
  ComplexMatrix m(rows_, cols_);
  for (size_t k = 0; k < e_.size(); ++k) m.e_[k] = cxd(e_[k].real(), 0.0);
  return m;
}

ComplexMatrix ComplexMatrix::imag_part() const {
  ComplexMatrix m(rows_, cols_);
  for (size_t k = 0; k < e_.size(); ++k) m.e_[k] = cxd(e_[k].imag(), 0.0);
  return m;
}

ComplexMatrix ComplexMatrix::operator+(const ComplexMatrix& o) const {
  ComplexMatrix m = *this;
  m += o;
  return m;
}

ComplexMatrix ComplexMatrix::operator-(const ComplexMatrix& o) const {
  ComplexMatrix m = *this;
  m -= o;
  return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix add shape mismatch");
  for (size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix sub shape mismatch");
  for (size_t k = 0; k < e_.size(); ++k) e_[k] -= o.e_[k];
  return *this;
}

ComplexMatrix ComplexMatrix::operator*(const ComplexMatrix& o) const {
  if (cols_ != o.rows_) throw DimensionMismatch("matrix mul shape mismatch");
  ComplexMatrix m(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i) {
    for (int k = 0; k < cols_; ++k) {
      const cxd a = (*this)(i, k);
      if (a == cxd(0.0, 0.0)) continue;
      for (int j = 0; j < o.cols_; ++j) m(i, j) += a * o(k, j);
    }
  }
  return m;
}

CVec ComplexMatrix::operator*(const CVec& v) const {
  if (cols_ != static_cast<int>(v.size())) throw DimensionMismatch("matvec shape mismatch");
  CVec r(rows_, cxd(0.0, 0.0));
  for (int i = 0; i < rows_; ++i) {
    cxd acc(0.0, 0.0);
    for (int k = 0; k < cols_; ++k) acc += (*this)(i, k) * v[k];
    r[i] = acc;
  }
  return r;
}

ComplexMatrix operator*(cxd a, const ComplexMatrix& m) {
  ComplexMatrix r = m;
  for (auto& x : r.e_) x *= a;
  return r;
}

ComplexMatrix operator*(double a, const ComplexMatrix& m) { return cxd(a, 0.0) * m; }

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& x : e_) s += std::norm(x);
  return std::sqrt(s);
}

double ComplexMatrix::max_abs() const {
  double s = 0.0;
  for (const auto& x : e_) s = std::max(s, std::abs(x));
  return s;
}

bool ComplexMatrix::all_finite() const {
  for (const auto& x : e_)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

bool ComplexMatrix::is_zero(double tol) const { return max_abs() <= tol; }

cxd trace(const ComplexMatrix& m) {
  if (!m.square()) throw DimensionMismatch("trace of non-square matrix");
  cxd t(0.0, 0.0);
  for (int i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix m(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const cxd aij = a(i, j);
      if (aij == cxd(0.0, 0.0)) continue;
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) m(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return m;
}

cxd inner(const CVec& u, const CVec& v) {
  if (u.size() != v.size()) throw DimensionMismatch("inner product length mismatch");
  cxd s(0.0, 0.0);
  for (size_t i = 0; i < u.size(); ++i) s += std::conj(u[i]) * v[i];
  return s;
}

double norm2(const CVec& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

HermitianMatrix::HermitianMatrix(ComplexMatrix m) : mat_(std::move(m)) {
  if (!mat_.square()) throw NonHermitian("Hermitian matrix must be square");
  if (!mat_.all_finite()) throw NonHermitian("non-finite entries");
  const int n = mat_.rows();
  const double tol = 1e-12 * (1.0 + mat_.max_abs());
  for (int i = 0; i < n; ++i) {
    if (std::abs(mat_(i, i).imag()) > tol) throw NonHermitian("diagonal entry has imaginary part");
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(mat_(i, j) - std::conj(mat_(j, i))) > tol) throw NonHermitian("matrix is not Hermitian");
    }
  }
  // exact symmetrization so downstream code can rely on H == H^*
  for (int i = 0; i < n; ++i) {
    mat_(i, i) = cxd(mat_(i, i).real(), 0.0);
    for (int j = i + 1; j < n; ++j) {
      const cxd v = 0.5 * (mat_(i, j) + std::conj(mat_(j, i)));
      mat_(i, j) = v;
      mat_(j, i) = std::conj(v);
    }
  }
}

HermitianMatrix HermitianMatrix::from_real_symmetric(const ComplexMatrix& m) { return HermitianMatrix(m); }

double HermitianMatrix::trace_real() const { return trace(mat_).real(); }

}  // namespace cpcone
