#include "cpcone/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpcone {

namespace {

// One cyclic Jacobi sweep; returns the off-diagonal Frobenius norm before
// the sweep. a and v are n x n row-major; v accumulates rotations.
double jacobi_sweep(int n, RVec& a, RVec& v) {
  auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
  auto V = [&](int i, int j) -> double& { return v[static_cast<size_t>(i) * n + j]; };
  double off = 0.0;
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
  off = std::sqrt(2.0 * off);

  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) {
      const double apq = A(p, q);
      if (apq == 0.0) continue;
      const double app = A(p, p), aqq = A(q, q);
      const double tau = (aqq - app) / (2.0 * apq);
      double t;
      if (tau >= 0.0)
        t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
      else
        t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = t * c;

      A(p, p) = app - t * apq;
      A(q, q) = aqq + t * apq;
      A(p, q) = 0.0;
      A(q, p) = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k == p || k == q) continue;
        const double akp = A(k, p), akq = A(k, q);
        A(k, p) = c * akp - s * akq;
        A(p, k) = A(k, p);
        A(k, q) = s * akp + c * akq;
        A(q, k) = A(k, q);
      }
      for (int k = 0; k < n; ++k) {
        const double vkp = V(k, p), vkq = V(k, q);
        V(k, p) = c * vkp - s * vkq;
        V(k, q) = s * vkp + c * vkq;
      }
    }
  }
  return off;
}

}  // namespace

void jacobi_eig_symmetric(int n, const RVec& a_in, RVec& eigenvalues, RVec& eigenvectors) {
  if (static_cast<int>(a_in.size()) != n * n) throw DimensionMismatch("jacobi: bad matrix size");
  RVec a = a_in;
  RVec v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;

  double norm = 0.0;
  for (double x : a) norm += x * x;
  norm = std::sqrt(norm);
  const double tol = 1e-15 * (1.0 + norm);

  // Rotation budget: 30 n^3 total rotations, i.e. ~60n sweeps.
  const long max_sweeps = std::max<long>(30, 60L * std::max(n, 1));
  bool converged = false;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    const double off = jacobi_sweep(n, a, v);
    if (off <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // check final off-diagonal mass before giving up
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * a[static_cast<size_t>(p) * n + q] * a[static_cast<size_t>(p) * n + q];
    if (std::sqrt(off) > 1e-10 * (1.0 + norm)) throw NoConvergence("jacobi eigensolver did not converge");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a[static_cast<size_t>(i) * n + i] < a[static_cast<size_t>(j) * n + j]; });

  eigenvalues.assign(n, 0.0);
  eigenvectors.assign(static_cast<size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k) {
    eigenvalues[k] = a[static_cast<size_t>(order[k]) * n + order[k]];
    for (int i = 0; i < n; ++i) eigenvectors[static_cast<size_t>(i) * n + k] = v[static_cast<size_t>(i) * n + order[k]];
  }
}

ComplexMatrix Spectrum::reconstruct() const {
  const int n = eigenvectors.rows();
  ComplexMatrix scaled = eigenvectors;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) scaled(i, j) *= eigenvalues[j];
  return scaled * eigenvectors.dagger();
}

Spectrum eig_hermitian(const HermitianMatrix& h) {
  const int n = h.dim();
  const int N = 2 * n;
  RVec embed(static_cast<size_t>(N) * N, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double re = h(i, j).real();
      const double im = h(i, j).imag();
      embed[static_cast<size_t>(i) * N + j] = re;
      embed[static_cast<size_t>(n + i) * N + (n + j)] = re;
      embed[static_cast<size_t>(i) * N + (n + j)] = -im;
      embed[static_cast<size_t>(n + i) * N + j] = im;
    }
  }

  RVec evals, evecs;
  jacobi_eig_symmetric(N, embed, evals, evecs);

  // Each Hermitian eigenvector appears twice among the embedded real
  // eigenvectors (phase rotation). Walk ascending, map [a;b] -> a + ib,
  // and keep those with a significant component orthogonal to the ones
  // already selected.
  Spectrum sp;
  sp.eigenvalues.reserve(n);
  sp.eigenvectors = ComplexMatrix(n, n);
  std::vector<CVec> kept;
  kept.reserve(n);
  for (int k = 0; k < N && static_cast<int>(kept.size()) < n; ++k) {
    CVec u(n);
    for (int i = 0; i < n; ++i)
      u[i] = cxd(evecs[static_cast<size_t>(i) * N + k], evecs[static_cast<size_t>(n + i) * N + k]);
    // two-pass Gram-Schmidt against the kept set
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& w : kept) {
        const cxd ip = inner(w, u);
        for (int i = 0; i < n; ++i) u[i] -= ip * w[i];
      }
    }
    const double r = norm2(u);
    if (r > 0.5) {
      for (auto& x : u) x /= r;
      // canonical phase: largest-magnitude component real positive
      int imax = 0;
      double best = 0.0;
      for (int i = 0; i < n; ++i) {
        const double m = std::abs(u[i]);
        if (m > best + 1e-14) {
          best = m;
          imax = i;
        }
      }
      const cxd ph = u[imax] / std::abs(u[imax]);
      for (auto& x : u) x /= ph;
      kept.push_back(u);
      sp.eigenvalues.push_back(evals[k]);
    }
  }
  if (static_cast<int>(kept.size()) != n) throw NoConvergence("eigenvector pairing failed");
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) sp.eigenvectors(i, j) = kept[j][i];
  return sp;
}

double min_eigenvalue(const HermitianMatrix& h) { return eig_hermitian(h).eigenvalues.front(); }
double max_eigenvalue(const HermitianMatrix& h) { return eig_hermitian(h).eigenvalues.back(); }

double trace_norm(const ComplexMatrix& a) {
  if (!a.all_finite()) throw BadParameter("trace_norm: non-finite input");
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  // Gram matrix of the smaller side
  const bool tall = a.rows() >= a.cols();
  const ComplexMatrix g = tall ? a.dagger() * a : a * a.dagger();
  const Spectrum sp = eig_hermitian(HermitianMatrix(g));
  double s = 0.0;
  for (double lam : sp.eigenvalues) s += std::sqrt(std::max(lam, 0.0));
  return s;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, int dim_a, int dim_b, TraceSide which) {
  if (m.rows() != dim_a * dim_b || m.cols() != dim_a * dim_b)
    throw DimensionMismatch("partial_trace: matrix dim != dim_a*dim_b");
  if (which == TraceSide::kFirst) {
    ComplexMatrix r(dim_b, dim_b);
    for (int i = 0; i < dim_b; ++i)
      for (int j = 0; j < dim_b; ++j) {
        cxd s(0.0, 0.0);
        for (int k = 0; k < dim_a; ++k) s += m(k * dim_b + i, k * dim_b + j);
        r(i, j) = s;
      }
    return r;
  }
  ComplexMatrix r(dim_a, dim_a);
  for (int i = 0; i < dim_a; ++i)
    for (int j = 0; j < dim_a; ++j) {
      cxd s(0.0, 0.0);
      for (int k = 0; k < dim_b; ++k) s += m(i * dim_b + k, j * dim_b + k);
      r(i, j) = s;
    }
  return r;
}

HermitianMatrix partial_trace(const HermitianMatrix& m, int dim_a, int dim_b, TraceSide which) {
  return HermitianMatrix(partial_trace(m.mat(), dim_a, dim_b, which));
}

ComplexMatrix vec_mat(const CVec& v, int rows, int cols) {
  if (static_cast<int>(v.size()) != rows * cols) throw DimensionMismatch("vec_mat: length != rows*cols");
  ComplexMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = v[static_cast<size_t>(c) * rows + r];
  return m;
}

CVec mat_vec(const ComplexMatrix& m) {
  CVec v(static_cast<size_t>(m.rows()) * m.cols());
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r) v[static_cast<size_t>(c) * m.rows() + r] = m(r, c);
  return v;
}

}  // namespace cpcone
