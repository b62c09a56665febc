#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "cpcone/conic.hpp"
#include "cpcone/linalg.hpp"

namespace cpcone::conic {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const RVec& a, const RVec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double nrm2(const RVec& a) { return std::sqrt(dot(a, a)); }

// dense symmetric d x d <-> svec with sqrt(2) off-diagonal scaling
void smat(int d, const double* sv, RVec& m) {
  m.assign(static_cast<size_t>(d) * d, 0.0);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      const double v = sv[svec_index(i, j)];
      const double e = (i == j) ? v : v / kSqrt2;
      m[static_cast<size_t>(i) * d + j] = e;
      m[static_cast<size_t>(j) * d + i] = e;
    }
}

void svec_of(int d, const RVec& m, double* sv) {
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i)
      sv[svec_index(i, j)] = (i == j) ? m[static_cast<size_t>(i) * d + i]
                                      : kSqrt2 * 0.5 * (m[static_cast<size_t>(i) * d + j] + m[static_cast<size_t>(j) * d + i]);
}

// C = A * B for dense row-major d x d
void matmul(int d, const RVec& a, const RVec& b, RVec& c) {
  c.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      const double aik = a[static_cast<size_t>(i) * d + k];
      if (aik == 0.0) continue;
      const double* brow = &b[static_cast<size_t>(k) * d];
      double* crow = &c[static_cast<size_t>(i) * d];
      for (int j = 0; j < d; ++j) crow[j] += aik * brow[j];
    }
}

// lower Cholesky, returns false if not positive definite
bool cholesky(int d, const RVec& a, RVec& l) {
  l.assign(static_cast<size_t>(d) * d, 0.0);
  for (int j = 0; j < d; ++j) {
    double diag = a[static_cast<size_t>(j) * d + j];
    for (int k = 0; k < j; ++k) diag -= l[static_cast<size_t>(j) * d + k] * l[static_cast<size_t>(j) * d + k];
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    l[static_cast<size_t>(j) * d + j] = ljj;
    for (int i = j + 1; i < d; ++i) {
      double v = a[static_cast<size_t>(i) * d + j];
      for (int k = 0; k < j; ++k) v -= l[static_cast<size_t>(i) * d + k] * l[static_cast<size_t>(j) * d + k];
      l[static_cast<size_t>(i) * d + j] = v / ljj;
    }
  }
  return true;
}

// one-sided Jacobi SVD of square m (row-major): m = U diag(sigma) V^T
bool jacobi_svd(int d, const RVec& m_in, RVec& u, RVec& sigma, RVec& v) {
  RVec b = m_in;
  v.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) v[static_cast<size_t>(i) * d + i] = 1.0;
  auto colget = [&](const RVec& mm, int c, int r) { return mm[static_cast<size_t>(r) * d + c]; };
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int r = 0; r < d; ++r) {
          const double bp = colget(b, p, r), bq = colget(b, q, r);
          app += bp * bp;
          aqq += bq * bq;
          apq += bp * bq;
        }
        if (std::abs(apq) <= 1e-16 * std::sqrt(app * aqq) || apq == 0.0) continue;
        changed = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0) ? 1.0 / (zeta + std::sqrt(1.0 + zeta * zeta))
                                       : -1.0 / (-zeta + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (int r = 0; r < d; ++r) {
          double& bp = b[static_cast<size_t>(r) * d + p];
          double& bq = b[static_cast<size_t>(r) * d + q];
          const double t1 = bp, t2 = bq;
          bp = cs * t1 - sn * t2;
          bq = sn * t1 + cs * t2;
          double& vp = v[static_cast<size_t>(r) * d + p];
          double& vq = v[static_cast<size_t>(r) * d + q];
          const double w1 = vp, w2 = vq;
          vp = cs * w1 - sn * w2;
          vq = sn * w1 + cs * w2;
        }
      }
    }
    if (!changed) break;
  }
  sigma.assign(d, 0.0);
  u.assign(static_cast<size_t>(d) * d, 0.0);
  for (int c = 0; c < d; ++c) {
    double s = 0.0;
    for (int r = 0; r < d; ++r) s += colget(b, c, r) * colget(b, c, r);
    s = std::sqrt(s);
    sigma[c] = s;
    if (s <= 0.0) return false;
    for (int r = 0; r < d; ++r) u[static_cast<size_t>(r) * d + c] = colget(b, c, r) / s;
  }
  return true;
}

struct BlockView {
  Block blk;
  int offset;   // into the variable vector
  int len;
};

// Nesterov-Todd scaling data for one block.
struct Scaling {
  // nonneg
  RVec w;
  // soc
  double beta = 0.0;
  RVec v;
  // psd
  RVec R, Rti, G;
  // all cone types: scaled point
  RVec lambda;
};

struct LdlFactor {
  int n = 0;
  RVec l;    // unit lower triangular, row-major
  RVec d;    // diagonal
  bool factor(const RVec& m, const RVec& reg) {
    l.assign(static_cast<size_t>(n) * n, 0.0);
    d.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double dj = m[static_cast<size_t>(j) * n + j] + reg[j];
      for (int k = 0; k < j; ++k) dj -= l[static_cast<size_t>(j) * n + k] * l[static_cast<size_t>(j) * n + k] * d[k];
      if (dj == 0.0 || !std::isfinite(dj)) return false;
      d[j] = dj;
      for (int i = j + 1; i < n; ++i) {
        double v = m[static_cast<size_t>(i) * n + j];
        const double* li = &l[static_cast<size_t>(i) * n];
        const double* lj = &l[static_cast<size_t>(j) * n];
        for (int k = 0; k < j; ++k) v -= li[k] * lj[k] * d[k];
        l[static_cast<size_t>(i) * n + j] = v / dj;
      }
    }
    return true;
  }
  void solve(RVec& x) const {
    for (int i = 0; i < n; ++i) {
      double v = x[i];
      const double* li = &l[static_cast<size_t>(i) * n];
      for (int k = 0; k < i; ++k) v -= li[k] * x[k];
      x[i] = v;
    }
    for (int i = 0; i < n; ++i) x[i] /= d[i];
    for (int i = n - 1; i >= 0; --i) {
      double v = x[i];
      for (int k = i + 1; k < n; ++k) v -= l[static_cast<size_t>(k) * n + i] * x[k];
      x[i] = v;
    }
  }
};

class Ipm {
 public:
  Ipm(const Program& p, const SolveOptions& opts) : opts_(opts) { setup(p); }

  Solution run();

 private:
  void setup(const Program& p);
  bool presolve(const Program& p);
  void compute_scalings();
  bool assemble_and_factor();
  bool newton(const RVec& rx_t, const RVec& ry_t, double rg_t, const RVec& ds_rhs, double dk_rhs,
              RVec& dx, RVec& dy, RVec& ds, double& dtau, double& dkappa);
  bool newton_once(const RVec& rx_t, const RVec& ry_t, double rg_t, const RVec& ds_rhs, double dk_rhs,
                   RVec& dx, RVec& dy, RVec& ds, double& dtau, double& dkappa);

  RVec atimes(const RVec& x) const;   // A x
  RVec attimes(const RVec& y) const;  // A^T y

  void apply_w(const Scaling& sc, const BlockView& bv, const double* in, double* out) const;
  void apply_winv(const Scaling& sc, const BlockView& bv, const double* in, double* out) const;
  void apply_winvt(const Scaling& sc, const BlockView& bv, const double* in, double* out) const;
  void apply_h(const Scaling& sc, const BlockView& bv, const double* in, double* out) const;
  RVec apply_h_full(const RVec& u) const;  // zero on free blocks

  void jordan_mul(const BlockView& bv, const double* a, const double* b, double* out) const;
  void jordan_div_lambda(const Scaling& sc, const BlockView& bv, const double* d, double* out) const;
  double max_step(const Scaling& sc, const BlockView& bv, const double* dir) const;  // vs lambda

  double cone_degree() const;
  void identity_point(RVec& x) const;

  SolveOptions opts_;
  std::vector<BlockView> views_;
  int nvar_ = 0;
  int mrow_ = 0;
  RVec c_, b_;
  std::vector<Triplet> trips_;
  std::vector<std::vector<std::pair<int, double>>> block_cols_;  // per global col: (row,val)
  std::vector<std::vector<int>> touched_;                        // per block: sorted touched rows
  std::vector<int> free_cols_;                                   // global col index of each free var
  std::vector<int> col_to_free_;                                 // -1 or free index

  // presolve bookkeeping
  std::vector<int> kept_rows_;
  int orig_rows_ = 0;
  bool presolve_infeasible_ = false;
  RVec infeas_y_;  // certificate in original row space

  // iterates
  RVec x_, y_, s_;
  double tau_ = 1.0, kappa_ = 1.0;

  std::vector<Scaling> scalings_;
  RVec msys_;  // bordered normal matrix
  LdlFactor ldl_;
  RVec reg_;
  int sys_n_ = 0;
  double deg_ = 0.0;
  int last_progress_iter_ = 0;
};

void Ipm::setup(const Program& p) {
  p.validate();
  int off = 0;
  for (const auto& blk : p.blocks) {
    BlockView bv;
    bv.blk = blk;
    bv.offset = off;
    bv.len = block_len(blk);
    off += bv.len;
    views_.push_back(bv);
  }
  nvar_ = off;
  c_ = p.c;
  orig_rows_ = p.num_rows;

  if (!presolve(p)) return;  // infeasible detected; run() will notice

  block_cols_.assign(nvar_, {});
  for (const auto& t : trips_) block_cols_[t.col].push_back({t.row, t.val});
  touched_.assign(views_.size(), {});
  col_to_free_.assign(nvar_, -1);
  for (size_t bi = 0; bi < views_.size(); ++bi) {
    const auto& bv = views_[bi];
    std::vector<int> rows;
    for (int l = 0; l < bv.len; ++l)
      for (const auto& [r, v] : block_cols_[bv.offset + l]) rows.push_back(r);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    touched_[bi] = std::move(rows);
    if (bv.blk.type == BlockType::kFree)
      for (int l = 0; l < bv.len; ++l) {
        col_to_free_[bv.offset + l] = static_cast<int>(free_cols_.size());
        free_cols_.push_back(bv.offset + l);
      }
  }
  sys_n_ = mrow_ + static_cast<int>(free_cols_.size());

  x_.assign(nvar_, 0.0);
  s_.assign(nvar_, 0.0);
  identity_point(x_);
  identity_point(s_);
  y_.assign(mrow_, 0.0);
  deg_ = cone_degree();
  scalings_.resize(views_.size());
}

// Row-echelon style presolve: drop dependent rows, detect inconsistency.
// Only run at modest sizes; larger systems rely on the regularized solve.
bool Ipm::presolve(const Program& p) {
  kept_rows_.clear();
  const double cost = static_cast<double>(p.num_rows) * p.num_rows * std::max(1, nvar_);
  if (cost > 2e8) {
    kept_rows_.resize(p.num_rows);
    for (int i = 0; i < p.num_rows; ++i) kept_rows_[i] = i;
    trips_ = p.a;
    b_ = p.b;
    mrow_ = p.num_rows;
    return true;
  }

  // dense rows
  std::vector<RVec> rows(p.num_rows, RVec(nvar_, 0.0));
  for (const auto& t : p.a) rows[t.row][t.col] += t.val;

  std::vector<RVec> basis;           // orthonormalized kept rows
  std::vector<RVec> comb;            // expansion of each basis vector in original rows
  std::vector<double> basis_b;
  b_.clear();
  for (int r = 0; r < p.num_rows; ++r) {
    RVec v = rows[r];
    RVec cmb(p.num_rows, 0.0);
    cmb[r] = 1.0;
    double bv = p.b[r];
    const double orig_norm = nrm2(v);
    for (int pass = 0; pass < 2; ++pass) {
      for (size_t k = 0; k < basis.size(); ++k) {
        const double ip = dot(basis[k], v);
        if (ip == 0.0) continue;
        for (int j = 0; j < nvar_; ++j) v[j] -= ip * basis[k][j];
        for (int j = 0; j < p.num_rows; ++j) cmb[j] -= ip * comb[k][j];
        bv -= ip * basis_b[k];
      }
    }
    const double rn = nrm2(v);
    if (rn <= 1e-12 * (1.0 + orig_norm)) {
      // dependent row; check rhs consistency
      if (std::abs(bv) > 1e-9 * (1.0 + std::abs(p.b[r]))) {
        presolve_infeasible_ = true;
        infeas_y_.assign(p.num_rows, 0.0);
        double byv = 0.0;
        for (int j = 0; j < p.num_rows; ++j) byv += cmb[j] * p.b[j];
        for (int j = 0; j < p.num_rows; ++j) infeas_y_[j] = cmb[j] / byv;
        return false;
      }
      continue;
    }
    for (int j = 0; j < nvar_; ++j) v[j] /= rn;
    for (int j = 0; j < p.num_rows; ++j) cmb[j] /= rn;
    bv /= rn;
    basis.push_back(std::move(v));
    comb.push_back(std::move(cmb));
    basis_b.push_back(bv);
    kept_rows_.push_back(r);
  }

  mrow_ = static_cast<int>(kept_rows_.size());
  std::vector<int> remap(p.num_rows, -1);
  for (int i = 0; i < mrow_; ++i) remap[kept_rows_[i]] = i;
  trips_.clear();
  for (const auto& t : p.a)
    if (remap[t.row] >= 0) trips_.push_back({remap[t.row], t.col, t.val});
  b_.resize(mrow_);
  for (int i = 0; i < mrow_; ++i) b_[i] = p.b[kept_rows_[i]];
  return true;
}

void Ipm::identity_point(RVec& x) const {
  for (const auto& bv : views_) {
    switch (bv.blk.type) {
      case BlockType::kFree:
        for (int i = 0; i < bv.len; ++i) x[bv.offset + i] = 0.0;
        break;
      case BlockType::kNonneg:
        for (int i = 0; i < bv.len; ++i) x[bv.offset + i] = 1.0;
        break;
      case BlockType::kSoc:
        x[bv.offset] = 1.0;
        for (int i = 1; i < bv.len; ++i) x[bv.offset + i] = 0.0;
        break;
      case BlockType::kPsd:
        for (int j = 0; j < bv.blk.dim; ++j)
          for (int i = 0; i <= j; ++i) x[bv.offset + svec_index(i, j)] = (i == j) ? 1.0 : 0.0;
        break;
    }
  }
}

double Ipm::cone_degree() const {
  double d = 0.0;
  for (const auto& bv : views_) {
    if (bv.blk.type == BlockType::kNonneg) d += bv.blk.dim;
    if (bv.blk.type == BlockType::kSoc) d += 1.0;
    if (bv.blk.type == BlockType::kPsd) d += bv.blk.dim;
  }
  return d;
}

RVec Ipm::atimes(const RVec& x) const {
  RVec r(mrow_, 0.0);
  for (const auto& t : trips_) r[t.row] += t.val * x[t.col];
  return r;
}

RVec Ipm::attimes(const RVec& y) const {
  RVec r(nvar_, 0.0);
  for (const auto& t : trips_) r[t.col] += t.val * y[t.row];
  return r;
}

void Ipm::compute_scalings() {
  for (size_t bi = 0; bi < views_.size(); ++bi) {
    const auto& bv = views_[bi];
    Scaling& sc = scalings_[bi];
    const double* x = &x_[bv.offset];
    const double* s = &s_[bv.offset];
    switch (bv.blk.type) {
      case BlockType::kFree:
        sc.lambda.assign(bv.len, 0.0);
        break;
      case BlockType::kNonneg: {
        sc.w.assign(bv.len, 0.0);
        sc.lambda.assign(bv.len, 0.0);
        for (int i = 0; i < bv.len; ++i) {
          if (!(x[i] > 0.0) || !(s[i] > 0.0)) throw NoConvergence("iterate left the cone");
          sc.w[i] = std::sqrt(x[i] / s[i]);
          sc.lambda[i] = std::sqrt(x[i] * s[i]);
        }
        break;
      }
      case BlockType::kSoc: {
        const int d = bv.len;
        auto jn = [&](const double* u) {
          double t = u[0] * u[0];
          for (int i = 1; i < d; ++i) t -= u[i] * u[i];
          return t;
        };
        const double jx = jn(x), js = jn(s);
        if (!(jx > 0.0) || !(js > 0.0) || !(x[0] > 0.0) || !(s[0] > 0.0))
          throw NoConvergence("iterate left the cone");
        const double rx = std::sqrt(jx), rs = std::sqrt(js);
        double xs = 0.0;
        for (int i = 0; i < d; ++i) xs += x[i] * s[i];
        const double gamma = std::sqrt((1.0 + xs / (rx * rs)) / 2.0);
        sc.v.assign(d, 0.0);
        sc.v[0] = (x[0] / rx + s[0] / rs) / (2.0 * gamma);
        for (int i = 1; i < d; ++i) sc.v[i] = (x[i] / rx - s[i] / rs) / (2.0 * gamma);
        sc.beta = std::sqrt(rx / rs);
        sc.lambda.assign(d, 0.0);
        apply_w(sc, bv, s, sc.lambda.data());
        if (std::getenv("CPCONE_IPM_TRACE")) {
          RVec chk(d);
          apply_winvt(sc, bv, x, chk.data());
          double err = 0.0;
          for (int i = 0; i < d; ++i) err = std::max(err, std::abs(chk[i] - sc.lambda[i]));
          if (err > 1e-8 * (1.0 + std::abs(sc.lambda[0])))
            std::fprintf(stderr, "      SOC scaling mismatch: %.3e\n", err);
        }
        break;
      }
      case BlockType::kPsd: {
        const int d = bv.blk.dim;
        RVec xm, sm;
        smat(d, x, xm);
        smat(d, s, sm);
        RVec lx, ls;
        if (!cholesky(d, xm, lx) || !cholesky(d, sm, ls)) throw NoConvergence("iterate left the cone");
        // m = ls^T lx
        RVec lst(static_cast<size_t>(d) * d, 0.0);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) lst[static_cast<size_t>(i) * d + j] = ls[static_cast<size_t>(j) * d + i];
        RVec m;
        matmul(d, lst, lx, m);
        RVec u, sig, v;
        if (!jacobi_svd(d, m, u, sig, v)) throw NoConvergence("NT scaling SVD failed");
        sc.R.assign(static_cast<size_t>(d) * d, 0.0);
        sc.Rti.assign(static_cast<size_t>(d) * d, 0.0);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            const double isq = 1.0 / std::sqrt(sig[j]);
            double rv = 0.0, tv = 0.0;
            for (int k = 0; k < d; ++k) {
              rv += lx[static_cast<size_t>(i) * d + k] * v[static_cast<size_t>(k) * d + j];
              tv += ls[static_cast<size_t>(i) * d + k] * u[static_cast<size_t>(k) * d + j];
            }
            sc.R[static_cast<size_t>(i) * d + j] = rv * isq;
            sc.Rti[static_cast<size_t>(i) * d + j] = tv * isq;
          }
        RVec rt(static_cast<size_t>(d) * d, 0.0);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) rt[static_cast<size_t>(i) * d + j] = sc.R[static_cast<size_t>(j) * d + i];
        matmul(d, sc.R, rt, sc.G);
        sc.lambda.assign(bv.len, 0.0);
        for (int i = 0; i < d; ++i) sc.lambda[svec_index(i, i)] = sig[i];
        break;
      }
    }
  }
}

void Ipm::apply_w(const Scaling& sc, const BlockView& bv, const double* in, double* out) const {
  switch (bv.blk.type) {
    case BlockType::kFree:
      for (int i = 0; i < bv.len; ++i) out[i] = 0.0;
      return;
    case BlockType::kNonneg:
      for (int i = 0; i < bv.len; ++i) out[i] = sc.w[i] * in[i];
      return;
    case BlockType::kSoc: {
      // W = beta * [[v0, vz^T], [vz, I + vz vz^T/(1+v0)]]
      const int d = bv.len;
      double vz_u = 0.0;
      for (int i = 1; i < d; ++i) vz_u += sc.v[i] * in[i];
      out[0] = sc.beta * (sc.v[0] * in[0] + vz_u);
      const double coef = in[0] + vz_u / (1.0 + sc.v[0]);
      for (int i = 1; i < d; ++i) out[i] = sc.beta * (in[i] + sc.v[i] * coef);
      return;
    }
    case BlockType::kPsd: {
      const int d = bv.blk.dim;
      RVec m, rt(static_cast<size_t>(d) * d), t1, t2;
      smat(d, in, m);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) rt[static_cast<size_t>(i) * d + j] = sc.R[static_cast<size_t>(j) * d + i];
      matmul(d, rt, m, t1);
      matmul(d, t1, sc.R, t2);
      svec_of(d, t2, out);
      return;
    }
  }
}

void Ipm::apply_winv(const Scaling& sc, const BlockView& bv, const double* in, double* out) const {
  switch (bv.blk.type) {
    case BlockType::kFree:
      for (int i = 0; i < bv.len; ++i) out[i] = 0.0;
      return;
    case BlockType::kNonneg:
      for (int i = 0; i < bv.len; ++i) out[i] = in[i] / sc.w[i];
      return;
    case BlockType::kSoc: {
      // W^{-1} = (1/beta) J Hm(v) J
      const int d = bv.len;
      double vz_u = 0.0;
      for (int i = 1; i < d; ++i) vz_u += sc.v[i] * in[i];
      out[0] = (sc.v[0] * in[0] - vz_u) / sc.beta;
      const double coef = in[0] - vz_u / (1.0 + sc.v[0]);
      for (int i = 1; i < d; ++i) out[i] = (in[i] - sc.v[i] * coef) / sc.beta;
      return;
    }
    case BlockType::kPsd: {
      const int d = bv.blk.dim;
      RVec m, tt(static_cast<size_t>(d) * d), t1, t2;
      smat(d, in, m);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) tt[static_cast<size_t>(i) * d + j] = sc.Rti[static_cast<size_t>(j) * d + i];
      matmul(d, sc.Rti, m, t1);
      matmul(d, t1, tt, t2);
      svec_of(d, t2, out);
      return;
    }
  }
}

void Ipm::apply_winvt(const Scaling& sc, const BlockView& bv, const double* in, double* out) const {
  switch (bv.blk.type) {
    case BlockType::kFree:
      for (int i = 0; i < bv.len; ++i) out[i] = 0.0;
      return;
    case BlockType::kNonneg:
      apply_winv(sc, bv, in, out);
      return;
    case BlockType::kSoc:
      apply_winv(sc, bv, in, out);
      return;
    case BlockType::kPsd: {
      const int d = bv.blk.dim;
      RVec m, tt(static_cast<size_t>(d) * d), t1, t2;
      smat(d, in, m);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) tt[static_cast<size_t>(i) * d + j] = sc.Rti[static_cast<size_t>(j) * d + i];
      matmul(d, tt, m, t1);
      matmul(d, t1, sc.Rti, t2);
      svec_of(d, t2, out);
      return;
    }
  }
}

void Ipm::apply_h(const Scaling& sc, const BlockView& bv, const double* in, double* out) const {
  switch (bv.blk.type) {
    case BlockType::kFree:
      for (int i = 0; i < bv.len; ++i) out[i] = 0.0;
      return;
    case BlockType::kNonneg:
      for (int i = 0; i < bv.len; ++i) out[i] = sc.w[i] * sc.w[i] * in[i];
      return;
    case BlockType::kSoc: {
      // H = W^2 = beta^2 (2 v v^T - J)
      const int d = bv.len;
      double vu = 0.0;
      for (int i = 0; i < d; ++i) vu += sc.v[i] * in[i];
      const double b2 = sc.beta * sc.beta;
      out[0] = b2 * (2.0 * sc.v[0] * vu - in[0]);
      for (int i = 1; i < d; ++i) out[i] = b2 * (2.0 * sc.v[i] * vu + in[i]);
      return;
    }
    case BlockType::kPsd: {
      const int d = bv.blk.dim;
      RVec m, t1, t2;
      smat(d, in, m);
      matmul(d, sc.G, m, t1);
      matmul(d, t1, sc.G, t2);
      svec_of(d, t2, out);
      return;
    }
  }
}

RVec Ipm::apply_h_full(const RVec& u) const {
  RVec r(nvar_, 0.0);
  for (size_t bi = 0; bi < views_.size(); ++bi)
    apply_h(scalings_[bi], views_[bi], &u[views_[bi].offset], &r[views_[bi].offset]);
  return r;
}

void Ipm::jordan_mul(const BlockView& bv, const double* a, const double* b, double* out) const {
  switch (bv.blk.type) {
    case BlockType::kFree:
      for (int i = 0; i < bv.len; ++i) out[i] = 0.0;
      return;
    case BlockType::kNonneg:
      for (int i = 0; i < bv.len; ++i) out[i] = a[i] * b[i];
      return;
    case BlockType::kSoc: {
      const int d = bv.len;
      double ab = 0.0;
      for (int i = 0; i < d; ++i) ab += a[i] * b[i];
      out[0] = ab;
      for (int i = 1; i < d; ++i) out[i] = a[0] * b[i] + b[0] * a[i];
      return;
    }
    case BlockType::kPsd: {
      const int d = bv.blk.dim;
      RVec am, bm, t1, t2;
      smat(d, a, am);
      smat(d, b, bm);
      matmul(d, am, bm, t1);
      matmul(d, bm, am, t2);
      for (size_t k = 0; k < t1.size(); ++k) t1[k] = 0.5 * (t1[k] + t2[k]);
      svec_of(d, t1, out);
      return;
    }
  }
}

void Ipm::jordan_div_lambda(const Scaling& sc, const BlockView& bv, const double* dd, double* out) const {
  switch (bv.blk.type) {
    case BlockType::kFree:
      for (int i = 0; i < bv.len; ++i) out[i] = 0.0;
      return;
    case BlockType::kNonneg:
      for (int i = 0; i < bv.len; ++i) out[i] = dd[i] / sc.lambda[i];
      return;
    case BlockType::kSoc: {
      const int d = bv.len;
      const double* lam = sc.lambda.data();
      double a = lam[0] * lam[0];
      for (int i = 1; i < d; ++i) a -= lam[i] * lam[i];
      double lz = 0.0;
      for (int i = 1; i < d; ++i) lz += lam[i] * dd[i];
      const double z0 = (lam[0] * dd[0] - lz) / a;
      out[0] = z0;
      for (int i = 1; i < d; ++i) out[i] = (dd[i] - z0 * lam[i]) / lam[0];
      return;
    }
    case BlockType::kPsd: {
      const int d = bv.blk.dim;
      RVec lamd(d);
      for (int i = 0; i < d; ++i) lamd[i] = sc.lambda[svec_index(i, i)];
      RVec m;
      smat(d, dd, m);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m[static_cast<size_t>(i) * d + j] *= 2.0 / (lamd[i] + lamd[j]);
      svec_of(d, m, out);
      return;
    }
  }
}

double Ipm::max_step(const Scaling& sc, const BlockView& bv, const double* dir) const {
  switch (bv.blk.type) {
    case BlockType::kFree:
      return kInf;
    case BlockType::kNonneg: {
      double a = kInf;
      for (int i = 0; i < bv.len; ++i)
        if (dir[i] < 0.0) a = std::min(a, -sc.lambda[i] / dir[i]);
      return a;
    }
    case BlockType::kSoc: {
      const int d = bv.len;
      const double* lam = sc.lambda.data();
      double qa = dir[0] * dir[0], qb = lam[0] * dir[0], qc = lam[0] * lam[0];
      for (int i = 1; i < d; ++i) {
        qa -= dir[i] * dir[i];
        qb -= lam[i] * dir[i];
        qc -= lam[i] * lam[i];
      }
      qb *= 2.0;
      double best = kInf;
      if (dir[0] < 0.0) best = std::min(best, -lam[0] / dir[0]);
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double r : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
          if (std::isfinite(r) && r > 0.0) {
            // valid boundary only if top component still nonnegative there
            if (lam[0] + r * dir[0] >= -1e-14 * lam[0]) best = std::min(best, r);
          }
        }
      }
      if (qa == 0.0 && qb < 0.0) best = std::min(best, -qc / qb);
      return best;
    }
    case BlockType::kPsd: {
      const int d = bv.blk.dim;
      RVec lamd(d);
      for (int i = 0; i < d; ++i) lamd[i] = sc.lambda[svec_index(i, i)];
      RVec m;
      smat(d, dir, m);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          m[static_cast<size_t>(i) * d + j] /= std::sqrt(lamd[i]) * std::sqrt(lamd[j]);
      RVec ev, evec;
      jacobi_eig_symmetric(d, m, ev, evec);
      const double mn = ev.front();
      return (mn < 0.0) ? -1.0 / mn : kInf;
    }
  }
  return kInf;
}

bool Ipm::assemble_and_factor() {
  msys_.assign(static_cast<size_t>(sys_n_) * sys_n_, 0.0);
  auto M = [&](int i, int j) -> double& { return msys_[static_cast<size_t>(i) * sys_n_ + j]; };

  for (size_t bi = 0; bi < views_.size(); ++bi) {
    const auto& bv = views_[bi];
    const auto& sc = scalings_[bi];
    switch (bv.blk.type) {
      case BlockType::kFree:
        for (int l = 0; l < bv.len; ++l) {
          const int f = col_to_free_[bv.offset + l];
          for (const auto& [r, v] : block_cols_[bv.offset + l]) {
            M(r, mrow_ + f) += v;
            M(mrow_ + f, r) += v;
          }
        }
        break;
      case BlockType::kNonneg:
        for (int l = 0; l < bv.len; ++l) {
          const double h = sc.w[l] * sc.w[l];
          const auto& col = block_cols_[bv.offset + l];
          for (size_t p = 0; p < col.size(); ++p)
            for (size_t q = 0; q < col.size(); ++q) M(col[p].first, col[q].first) += h * col[p].second * col[q].second;
        }
        break;
      case BlockType::kSoc: {
        // A H A^T = beta^2 (2 (A v)(A v)^T - A J A^T)
        const int d = bv.len;
        const double b2 = sc.beta * sc.beta;
        RVec pv(mrow_, 0.0);
        for (int l = 0; l < d; ++l) {
          const double vl = sc.v[l];
          for (const auto& [r, v] : block_cols_[bv.offset + l]) pv[r] += v * vl;
        }
        for (int l = 0; l < d; ++l) {
          const double sign = (l == 0) ? 1.0 : -1.0;
          const auto& col = block_cols_[bv.offset + l];
          for (size_t p = 0; p < col.size(); ++p)
            for (size_t q = 0; q < col.size(); ++q)
              M(col[p].first, col[q].first) -= b2 * sign * col[p].second * col[q].second;
        }
        for (int ri : touched_[bi])
          for (int rj : touched_[bi]) M(ri, rj) += 2.0 * b2 * pv[ri] * pv[rj];
        break;
      }
      case BlockType::kPsd: {
        const int d = bv.blk.dim;
        const auto& rows = touched_[bi];
        if (rows.empty()) break;
        // per touched row: dense constraint matrix and G C G
        std::vector<RVec> crows(rows.size());
        std::vector<RVec> csvec(rows.size(), RVec(bv.len, 0.0));
        for (size_t k = 0; k < rows.size(); ++k) crows[k].assign(static_cast<size_t>(d) * d, 0.0);
        for (int l = 0; l < bv.len; ++l)
          for (const auto& [r, v] : block_cols_[bv.offset + l]) {
            const auto it = std::lower_bound(rows.begin(), rows.end(), r);
            csvec[it - rows.begin()][l] += v;
          }
        for (size_t k = 0; k < rows.size(); ++k) {
          RVec cm, t1, t2;
          smat(d, csvec[k].data(), cm);
          matmul(d, sc.G, cm, t1);
          matmul(d, t1, sc.G, t2);
          RVec dsv(bv.len, 0.0);
          svec_of(d, t2, dsv.data());
          for (size_t k2 = 0; k2 <= k; ++k2) {
            double ip = 0.0;
            for (int l = 0; l < bv.len; ++l) ip += dsv[l] * csvec[k2][l];
            M(rows[k], rows[k2]) += ip;
            if (k2 != k) M(rows[k2], rows[k]) += ip;
          }
        }
        break;
      }
    }
  }

  // static regularization: quasidefinite (+delta, -delta)
  double scale = 1.0;
  for (int i = 0; i < sys_n_; ++i) scale = std::max(scale, std::abs(M(i, i)));
  reg_.assign(sys_n_, 0.0);
  const double delta = 1e-12 * scale;
  for (int i = 0; i < mrow_; ++i) reg_[i] = delta;
  for (int i = mrow_; i < sys_n_; ++i) reg_[i] = -std::max(delta, 1e-10);

  ldl_.n = sys_n_;
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (ldl_.factor(msys_, reg_)) return true;
    for (auto& r : reg_) r *= 1e4;
  }
  return false;
}

bool Ipm::newton(const RVec& rx_t, const RVec& ry_t, double rg_t, const RVec& ds_rhs, double dk_rhs,
                 RVec& dx, RVec& dy, RVec& ds, double& dtau, double& dkappa) {
  if (!newton_once(rx_t, ry_t, rg_t, ds_rhs, dk_rhs, dx, dy, ds, dtau, dkappa)) return false;

  // full-system refinement: residuals are recomputed through the fresh
  // operator path, which differs from the assembled normal matrix by
  // rounding of order |H|; near convergence that error dominates
  for (int round = 0; round < 3; ++round) {
    RVec e_ry = atimes(dx);
    for (int i = 0; i < mrow_; ++i) e_ry[i] = ry_t[i] - (e_ry[i] - b_[i] * dtau);
    RVec atdy = attimes(dy);
    RVec e_rx(nvar_);
    for (int i = 0; i < nvar_; ++i) e_rx[i] = rx_t[i] - (-atdy[i] - ds[i] + c_[i] * dtau);
    const double e_rg = rg_t - (dot(c_, dx) - dot(b_, dy) + dkappa);
    RVec e_ds(nvar_, 0.0);
    for (size_t bi = 0; bi < views_.size(); ++bi) {
      const auto& bv = views_[bi];
      if (bv.blk.type == BlockType::kFree) continue;
      RVec wds(bv.len), wtdx(bv.len), sum(bv.len), lhs(bv.len);
      apply_w(scalings_[bi], bv, &ds[bv.offset], wds.data());
      apply_winvt(scalings_[bi], bv, &dx[bv.offset], wtdx.data());
      for (int l = 0; l < bv.len; ++l) sum[l] = wds[l] + wtdx[l];
      jordan_mul(bv, scalings_[bi].lambda.data(), sum.data(), lhs.data());
      for (int l = 0; l < bv.len; ++l) e_ds[bv.offset + l] = ds_rhs[bv.offset + l] - lhs[l];
    }
    const double e_dk = dk_rhs - (kappa_ * dtau + tau_ * dkappa);

    double scale = std::abs(rg_t) + std::abs(dk_rhs) + 1.0;
    for (int i = 0; i < mrow_; ++i) scale = std::max(scale, std::abs(ry_t[i]));
    double errn = std::max(std::abs(e_rg), std::abs(e_dk));
    for (int i = 0; i < mrow_; ++i) errn = std::max(errn, std::abs(e_ry[i]));
    for (int i = 0; i < nvar_; ++i) errn = std::max(errn, std::max(std::abs(e_rx[i]), std::abs(e_ds[i])));
    if (errn <= 1e-13 * scale) break;

    RVec cx, cy, cs;
    double ct, ck;
    if (!newton_once(e_rx, e_ry, e_rg, e_ds, e_dk, cx, cy, cs, ct, ck)) break;
    for (int i = 0; i < nvar_; ++i) dx[i] += cx[i];
    for (int i = 0; i < mrow_; ++i) dy[i] += cy[i];
    for (int i = 0; i < nvar_; ++i) ds[i] += cs[i];
    dtau += ct;
    dkappa += ck;
  }
  return true;
}

bool Ipm::newton_once(const RVec& rx_t, const RVec& ry_t, double rg_t, const RVec& ds_rhs, double dk_rhs,
                      RVec& dx, RVec& dy, RVec& ds, double& dtau, double& dkappa) {
  // g = rx_t + W^{-1}(lambda \ ds_rhs) on conic blocks
  RVec g(nvar_, 0.0);
  for (size_t bi = 0; bi < views_.size(); ++bi) {
    const auto& bv = views_[bi];
    if (bv.blk.type == BlockType::kFree) continue;
    RVec q(bv.len), wq(bv.len);
    jordan_div_lambda(scalings_[bi], bv, &ds_rhs[bv.offset], q.data());
    apply_winv(scalings_[bi], bv, q.data(), wq.data());
    for (int l = 0; l < bv.len; ++l) g[bv.offset + l] = rx_t[bv.offset + l] + wq[l];
  }

  const RVec hg = apply_h_full(g);
  const RVec ahg = atimes(hg);
  const RVec hc = apply_h_full(c_);
  const RVec ahc = atimes(hc);

  auto solve_sys = [&](const RVec& top, const RVec& bot, RVec& out_y, RVec& out_f) {
    RVec rhs(sys_n_, 0.0);
    for (int i = 0; i < mrow_; ++i) rhs[i] = top[i];
    for (size_t i = 0; i < free_cols_.size(); ++i) rhs[mrow_ + i] = bot[i];
    RVec sol = rhs;
    ldl_.solve(sol);
    // iterative refinement against unregularized system
    for (int it = 0; it < 2; ++it) {
      RVec resid = rhs;
      for (int i = 0; i < sys_n_; ++i) {
        double acc = 0.0;
        const double* mi = &msys_[static_cast<size_t>(i) * sys_n_];
        for (int j = 0; j < sys_n_; ++j) acc += mi[j] * sol[j];
        resid[i] -= acc;
      }
      ldl_.solve(resid);
      for (int i = 0; i < sys_n_; ++i) sol[i] += resid[i];
    }
    if (std::getenv("CPCONE_IPM_TRACE")) {
      double rn = 0.0, bn = 0.0;
      for (int i = 0; i < sys_n_; ++i) {
        double acc = 0.0;
        const double* mi = &msys_[static_cast<size_t>(i) * sys_n_];
        for (int j = 0; j < sys_n_; ++j) acc += mi[j] * sol[j];
        rn += (rhs[i] - acc) * (rhs[i] - acc);
        bn += rhs[i] * rhs[i];
      }
      std::fprintf(stderr, "      solve_sys resid %.2e / rhs %.2e\n", std::sqrt(rn), std::sqrt(bn));
    }
    out_y.assign(sol.begin(), sol.begin() + mrow_);
    out_f.assign(sol.begin() + mrow_, sol.end());
  };

  // rhs0 = [ry_t - A H g ; -rx_t(free)], rhs1 = [A H c + b ; c(free)]
  RVec top0(mrow_), top1(mrow_);
  for (int i = 0; i < mrow_; ++i) {
    top0[i] = ry_t[i] - ahg[i];
    top1[i] = ahc[i] + b_[i];
  }
  RVec bot0(free_cols_.size()), bot1(free_cols_.size());
  for (size_t i = 0; i < free_cols_.size(); ++i) {
    bot0[i] = -rx_t[free_cols_[i]];
    bot1[i] = c_[free_cols_[i]];
  }
  RVec dy0, df0, dy1, df1;
  solve_sys(top0, bot0, dy0, df0);
  solve_sys(top1, bot1, dy1, df1);

  // tau elimination. Residual vectors are formed before applying H so the
  // quadratic forms below are evaluated without cancellation between
  // O(|H|) quantities.
  const RVec atdy0 = attimes(dy0);
  const RVec atdy1 = attimes(dy1);
  RVec r0(nvar_), r1(nvar_);
  for (int i = 0; i < nvar_; ++i) {
    r0[i] = atdy0[i] + g[i];
    r1[i] = atdy1[i] - c_[i];
  }
  const RVec dx0 = apply_h_full(r0);
  const RVec dx1 = apply_h_full(r1);

  double den = -kappa_ / tau_;
  for (int i = 0; i < nvar_; ++i) den -= r1[i] * dx1[i];
  for (size_t i = 0; i < free_cols_.size(); ++i) den -= df1[i] * r1[free_cols_[i]];

  double num = rg_t - dk_rhs / tau_ + dot(b_, dy0);
  for (int i = 0; i < nvar_; ++i) num -= c_[i] * dx0[i];
  for (size_t i = 0; i < free_cols_.size(); ++i) num -= c_[free_cols_[i]] * df0[i];

  if (den == 0.0 || !std::isfinite(num / den)) return false;
  dtau = num / den;

  dy.assign(mrow_, 0.0);
  for (int i = 0; i < mrow_; ++i) dy[i] = dy0[i] + dtau * dy1[i];

  dx.assign(nvar_, 0.0);
  for (int i = 0; i < nvar_; ++i) dx[i] = dx0[i] + dtau * dx1[i];
  for (size_t i = 0; i < free_cols_.size(); ++i) dx[free_cols_[i]] = df0[i] + dtau * df1[i];

  ds.assign(nvar_, 0.0);
  for (int i = 0; i < nvar_; ++i) ds[i] = -(atdy0[i] + dtau * atdy1[i]) + c_[i] * dtau - rx_t[i];
  for (int f : free_cols_) ds[f] = 0.0;

  dkappa = (dk_rhs - kappa_ * dtau) / tau_;

  if (std::getenv("CPCONE_IPM_DENSE_CHECK")) {
    // brute-force dense solve of the full linearized system for comparison
    const int N = 2 * nvar_ + mrow_ + 2;
    RVec big(static_cast<size_t>(N) * N, 0.0), rhs(N, 0.0);
    auto at = [&](int i, int j) -> double& { return big[static_cast<size_t>(i) * N + j]; };
    const int ox = 0, oy = nvar_, os = nvar_ + mrow_, ot = 2 * nvar_ + mrow_, ok = ot + 1;
    int row = 0;
    // A dx - b dtau = ry_t  (m rows)
    for (const auto& t : trips_) at(row + t.row, ox + t.col) += t.val;
    for (int i = 0; i < mrow_; ++i) {
      at(row + i, ot) = -b_[i];
      rhs[row + i] = ry_t[i];
    }
    row += mrow_;
    // -A^T dy - ds + c dtau = rx_t  (n rows)
    for (const auto& t : trips_) at(row + t.col, oy + t.row) -= t.val;
    for (int i = 0; i < nvar_; ++i) {
      at(row + i, os + i) = -1.0;
      at(row + i, ot) = c_[i];
      rhs[row + i] = rx_t[i];
    }
    row += nvar_;
    // c.dx - b.dy + dkappa = rg_t
    for (int i = 0; i < nvar_; ++i) at(row, ox + i) = c_[i];
    for (int i = 0; i < mrow_; ++i) at(row, oy + i) = -b_[i];
    at(row, ok) = 1.0;
    rhs[row] = rg_t;
    ++row;
    // lambda o (W ds + W^{-T} dx) = ds_rhs  per conic block; free: ds = 0
    for (size_t bi = 0; bi < views_.size(); ++bi) {
      const auto& bv = views_[bi];
      if (bv.blk.type == BlockType::kFree) {
        for (int l = 0; l < bv.len; ++l) {
          at(row, os + bv.offset + l) = 1.0;
          rhs[row] = 0.0;
          ++row;
        }
        continue;
      }
      for (int l = 0; l < bv.len; ++l) {
        RVec unit(bv.len, 0.0), tmp(bv.len), out(bv.len);
        unit[l] = 1.0;
        apply_winvt(scalings_[bi], bv, unit.data(), tmp.data());
        jordan_mul(bv, scalings_[bi].lambda.data(), tmp.data(), out.data());
        for (int l2 = 0; l2 < bv.len; ++l2) at(row + l2, ox + bv.offset + l) = out[l2];
        apply_w(scalings_[bi], bv, unit.data(), tmp.data());
        jordan_mul(bv, scalings_[bi].lambda.data(), tmp.data(), out.data());
        for (int l2 = 0; l2 < bv.len; ++l2) at(row + l2, os + bv.offset + l) = out[l2];
      }
      for (int l = 0; l < bv.len; ++l) rhs[row + l] = ds_rhs[bv.offset + l];
      row += bv.len;
    }
    // kappa dtau + tau dkappa = dk_rhs
    at(row, ot) = kappa_;
    at(row, ok) = tau_;
    rhs[row] = dk_rhs;
    ++row;
    // gaussian elimination with partial pivoting
    double min_pivot = kInf;
    for (int col = 0; col < N; ++col) {
      int piv = col;
      for (int r2 = col + 1; r2 < N; ++r2)
        if (std::abs(at(r2, col)) > std::abs(at(piv, col))) piv = r2;
      if (piv != col) {
        for (int j = 0; j < N; ++j) std::swap(at(col, j), at(piv, j));
        std::swap(rhs[col], rhs[piv]);
      }
      const double p = at(col, col);
      min_pivot = std::min(min_pivot, std::abs(p));
      for (int r2 = col + 1; r2 < N; ++r2) {
        const double f = at(r2, col) / p;
        if (f == 0.0) continue;
        for (int j = col; j < N; ++j) at(r2, j) -= f * at(col, j);
        rhs[r2] -= f * rhs[col];
      }
    }
    for (int r2 = N - 1; r2 >= 0; --r2) {
      double v = rhs[r2];
      for (int j = r2 + 1; j < N; ++j) v -= at(r2, j) * rhs[j];
      rhs[r2] = v / at(r2, r2);
    }
    double dmax = 0.0;
    for (int i = 0; i < nvar_; ++i) dmax = std::max(dmax, std::abs(rhs[ox + i] - dx[i]));
    for (int i = 0; i < mrow_; ++i) dmax = std::max(dmax, std::abs(rhs[oy + i] - dy[i]));
    for (int i = 0; i < nvar_; ++i) dmax = std::max(dmax, std::abs(rhs[os + i] - ds[i]));
    dmax = std::max(dmax, std::abs(rhs[ot] - dtau));
    dmax = std::max(dmax, std::abs(rhs[ok] - dkappa));
    std::fprintf(stderr, "      dense KKT check: max diff %.3e (dtau dense %.6e vs %.6e) min pivot %.3e\n", dmax,
                 rhs[ot], dtau, min_pivot);
  }

  if (std::getenv("CPCONE_IPM_TRACE")) {
    // numeric check of the five Newton equations
    RVec adx = atimes(dx);
    double e1 = 0.0;
    for (int i = 0; i < mrow_; ++i) e1 = std::max(e1, std::abs(adx[i] - b_[i] * dtau - ry_t[i]));
    RVec atdy2 = attimes(dy);
    double e2 = 0.0;
    for (int i = 0; i < nvar_; ++i) e2 = std::max(e2, std::abs(-atdy2[i] - ds[i] + c_[i] * dtau - rx_t[i]));
    double cdx = dot(c_, dx), bdy = dot(b_, dy);
    const double e3 = std::abs(cdx - bdy + dkappa - rg_t);
    double e4 = 0.0;
    for (size_t bi = 0; bi < views_.size(); ++bi) {
      const auto& bv = views_[bi];
      if (bv.blk.type == BlockType::kFree) continue;
      RVec wds(bv.len), wtdx(bv.len), sum(bv.len), lhs(bv.len);
      apply_w(scalings_[bi], bv, &ds[bv.offset], wds.data());
      apply_winvt(scalings_[bi], bv, &dx[bv.offset], wtdx.data());
      for (int l = 0; l < bv.len; ++l) sum[l] = wds[l] + wtdx[l];
      jordan_mul(bv, scalings_[bi].lambda.data(), sum.data(), lhs.data());
      for (int l = 0; l < bv.len; ++l) e4 = std::max(e4, std::abs(lhs[l] - ds_rhs[bv.offset + l]));
    }
    const double e5 = std::abs(kappa_ * dtau + tau_ * dkappa - dk_rhs);
    std::fprintf(stderr, "    newton eq residuals: %.2e %.2e %.2e %.2e %.2e\n", e1, e2, e3, e4, e5);
  }
  return std::isfinite(dtau) && std::isfinite(dkappa);
}

Solution Ipm::run() {
  Solution sol;
  if (presolve_infeasible_) {
    sol.status = Status::kPrimalInfeasible;
    sol.y = infeas_y_;
    sol.s.assign(nvar_, 0.0);
    sol.x.assign(nvar_, 0.0);
    return sol;
  }

  const double bnorm = nrm2(b_), cnorm = nrm2(c_);
  double best_metric = kInf;
  Solution best;

  int small_steps = 0;
  for (int iter = 0; iter <= opts_.max_iter; ++iter) {
    // residuals
    RVec res_p = atimes(x_);
    for (int i = 0; i < mrow_; ++i) res_p[i] -= b_[i] * tau_;
    RVec res_d = attimes(y_);
    for (int i = 0; i < nvar_; ++i) res_d[i] = -res_d[i] - s_[i] + c_[i] * tau_;
    double cx = dot(c_, x_), by = dot(b_, y_);
    const double res_g = cx - by + kappa_;

    // convergence checks on the scaled candidate
    const double pobj = cx / tau_;
    const double dobj = by / tau_;
    double xs = dot(x_, s_);
    const double gap = xs / (tau_ * tau_);
    const double pres = nrm2(res_p) / tau_ / (1.0 + bnorm);
    const double dres = nrm2(res_d) / tau_ / (1.0 + cnorm);
    const double relgap = std::abs(gap) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (std::getenv("CPCONE_IPM_TRACE"))
      std::fprintf(stderr, "iter %3d pres %.3e dres %.3e gap %.3e pobj %.6e tau %.3e kappa %.3e\n", iter, pres,
                   dres, relgap, pobj, tau_, kappa_);

    const double metric = std::max({pres, dres, relgap});
    if (metric < 0.99 * best_metric)
      last_progress_iter_ = iter;
    else if (iter - last_progress_iter_ > 20)
      break;  // no headway; report best iterate as stalled
    if (metric < best_metric) {
      best_metric = metric;
      best.x.assign(x_.size(), 0.0);
      best.y.assign(mrow_, 0.0);
      best.s.assign(s_.size(), 0.0);
      for (size_t i = 0; i < x_.size(); ++i) best.x[i] = x_[i] / tau_;
      for (int i = 0; i < mrow_; ++i) best.y[i] = y_[i] / tau_;
      for (size_t i = 0; i < s_.size(); ++i) best.s[i] = s_[i] / tau_;
      best.primal_obj = pobj;
      best.dual_obj = dobj;
      best.primal_res = pres;
      best.dual_res = dres;
      best.rel_gap = relgap;
      best.iterations = iter;
    }

    if (pres <= opts_.tol_feas && dres <= opts_.tol_feas && relgap <= opts_.tol_gap) {
      sol = best;
      sol.status = Status::kOptimal;
      sol.iterations = iter;
      // restore full-row y
      RVec fy(orig_rows_, 0.0);
      for (int i = 0; i < mrow_; ++i) fy[kept_rows_[i]] = sol.y[i];
      sol.y = fy;
      return sol;
    }

    // infeasibility certificates
    if (by > 0.0) {
      RVec aty = attimes(y_);
      double vnorm = 0.0;
      for (int i = 0; i < nvar_; ++i) {
        const double v = aty[i] + s_[i];
        vnorm += v * v;
      }
      vnorm = std::sqrt(vnorm) / by;
      if (vnorm <= opts_.tol_feas * (1.0 + cnorm)) {
        sol.status = Status::kPrimalInfeasible;
        sol.y.assign(orig_rows_, 0.0);
        for (int i = 0; i < mrow_; ++i) sol.y[kept_rows_[i]] = y_[i] / by;
        sol.s.assign(nvar_, 0.0);
        for (int i = 0; i < nvar_; ++i) sol.s[i] = s_[i] / by;
        sol.x.assign(nvar_, 0.0);
        sol.iterations = iter;
        return sol;
      }
    }
    if (cx < 0.0) {
      const RVec ax = atimes(x_);
      const double vnorm = nrm2(ax) / (-cx);
      if (vnorm <= opts_.tol_feas * (1.0 + bnorm)) {
        sol.status = Status::kDualInfeasible;
        sol.x.assign(nvar_, 0.0);
        for (int i = 0; i < nvar_; ++i) sol.x[i] = x_[i] / (-cx);
        sol.y.assign(orig_rows_, 0.0);
        sol.s.assign(nvar_, 0.0);
        sol.iterations = iter;
        return sol;
      }
    }

    if (iter == opts_.max_iter) break;

    try {
      compute_scalings();
    } catch (const NoConvergence&) {
      break;
    }
    double lamlam = 0.0;
    for (size_t bi = 0; bi < views_.size(); ++bi) lamlam += dot(scalings_[bi].lambda, scalings_[bi].lambda);
    const double mu = (lamlam + tau_ * kappa_) / (deg_ + 1.0);

    if (!assemble_and_factor()) break;

    // affine step
    RVec rx_t(nvar_), ry_t(mrow_);
    for (int i = 0; i < nvar_; ++i) rx_t[i] = -res_d[i];
    for (int i = 0; i < mrow_; ++i) ry_t[i] = -res_p[i];
    RVec ds_rhs(nvar_, 0.0);
    for (size_t bi = 0; bi < views_.size(); ++bi) {
      const auto& bv = views_[bi];
      if (bv.blk.type == BlockType::kFree) continue;
      RVec ll(bv.len);
      jordan_mul(bv, scalings_[bi].lambda.data(), scalings_[bi].lambda.data(), ll.data());
      for (int l = 0; l < bv.len; ++l) ds_rhs[bv.offset + l] = -ll[l];
    }
    RVec dx, dy, ds;
    double dtau, dkappa;
    if (!newton(rx_t, ry_t, -res_g, ds_rhs, -tau_ * kappa_, dx, dy, ds, dtau, dkappa)) break;

    // scaled directions and affine step size
    RVec sdx(nvar_, 0.0), sds(nvar_, 0.0);
    double alpha = kInf;
    for (size_t bi = 0; bi < views_.size(); ++bi) {
      const auto& bv = views_[bi];
      if (bv.blk.type == BlockType::kFree) continue;
      apply_winvt(scalings_[bi], bv, &dx[bv.offset], &sdx[bv.offset]);
      apply_w(scalings_[bi], bv, &ds[bv.offset], &sds[bv.offset]);
      alpha = std::min(alpha, max_step(scalings_[bi], bv, &sdx[bv.offset]));
      alpha = std::min(alpha, max_step(scalings_[bi], bv, &sds[bv.offset]));
    }
    if (dtau < 0.0) alpha = std::min(alpha, -tau_ / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa_ / dkappa);
    alpha = std::min(alpha, 1.0);
    if (!(alpha > 0.0)) break;

    double sigma = std::pow(1.0 - alpha, 3.0);
    sigma = std::min(1.0, std::max(0.0, sigma));

    // combined step
    for (int i = 0; i < nvar_; ++i) rx_t[i] = -(1.0 - sigma) * res_d[i];
    for (int i = 0; i < mrow_; ++i) ry_t[i] = -(1.0 - sigma) * res_p[i];
    for (size_t bi = 0; bi < views_.size(); ++bi) {
      const auto& bv = views_[bi];
      if (bv.blk.type == BlockType::kFree) continue;
      RVec ll(bv.len), corr(bv.len);
      jordan_mul(bv, scalings_[bi].lambda.data(), scalings_[bi].lambda.data(), ll.data());
      jordan_mul(bv, &sdx[bv.offset], &sds[bv.offset], corr.data());
      for (int l = 0; l < bv.len; ++l) ds_rhs[bv.offset + l] = -ll[l] - corr[l];
      // + sigma mu e
      if (bv.blk.type == BlockType::kNonneg)
        for (int l = 0; l < bv.len; ++l) ds_rhs[bv.offset + l] += sigma * mu;
      else if (bv.blk.type == BlockType::kSoc)
        ds_rhs[bv.offset] += sigma * mu;
      else
        for (int i2 = 0; i2 < bv.blk.dim; ++i2) ds_rhs[bv.offset + svec_index(i2, i2)] += sigma * mu;
    }
    const double dk_rhs = -tau_ * kappa_ - dtau * dkappa + sigma * mu;
    RVec dx2, dy2, ds2;
    double dtau2, dkappa2;
    if (!newton(rx_t, ry_t, -(1.0 - sigma) * res_g, ds_rhs, dk_rhs, dx2, dy2, ds2, dtau2, dkappa2)) break;

    double alpha2 = kInf;
    for (size_t bi = 0; bi < views_.size(); ++bi) {
      const auto& bv = views_[bi];
      if (bv.blk.type == BlockType::kFree) continue;
      apply_winvt(scalings_[bi], bv, &dx2[bv.offset], &sdx[bv.offset]);
      apply_w(scalings_[bi], bv, &ds2[bv.offset], &sds[bv.offset]);
      alpha2 = std::min(alpha2, max_step(scalings_[bi], bv, &sdx[bv.offset]));
      alpha2 = std::min(alpha2, max_step(scalings_[bi], bv, &sds[bv.offset]));
    }
    if (dtau2 < 0.0) alpha2 = std::min(alpha2, -tau_ / dtau2);
    if (dkappa2 < 0.0) alpha2 = std::min(alpha2, -kappa_ / dkappa2);
    alpha2 = std::min(0.99 * alpha2, 1.0);

    // wide-neighborhood guard: keep every complementarity pair above
    // gamma * mu(alpha) and do not let mu grow; protects against the
    // corrector overshooting after a decentering step
    auto pair_stats = [&](double a, double& mu_a, double& min_pair) {
      double tr = (tau_ + a * dtau2) * (kappa_ + a * dkappa2);
      min_pair = tr;
      double total = tr;
      for (size_t bi = 0; bi < views_.size(); ++bi) {
        const auto& bv = views_[bi];
        if (bv.blk.type == BlockType::kFree) continue;
        const auto& lam = scalings_[bi].lambda;
        RVec u(bv.len), w(bv.len);
        for (int l = 0; l < bv.len; ++l) {
          u[l] = lam[l] + a * sdx[bv.offset + l];
          w[l] = lam[l] + a * sds[bv.offset + l];
        }
        switch (bv.blk.type) {
          case BlockType::kNonneg:
            for (int l = 0; l < bv.len; ++l) {
              const double pr = u[l] * w[l];
              total += pr;
              min_pair = std::min(min_pair, pr);
            }
            break;
          case BlockType::kSoc: {
            double t = 0.0;
            for (int l = 0; l < bv.len; ++l) t += u[l] * w[l];
            double zn = 0.0;
            for (int l = 1; l < bv.len; ++l) {
              const double z = u[0] * w[l] + w[0] * u[l];
              zn += z * z;
            }
            total += t;
            min_pair = std::min(min_pair, t - std::sqrt(zn));
            break;
          }
          case BlockType::kPsd: {
            const int d = bv.blk.dim;
            RVec um, wm, t1, t2;
            smat(d, u.data(), um);
            smat(d, w.data(), wm);
            matmul(d, um, wm, t1);
            matmul(d, wm, um, t2);
            for (size_t k = 0; k < t1.size(); ++k) t1[k] = 0.5 * (t1[k] + t2[k]);
            RVec ev, evec;
            jacobi_eig_symmetric(d, t1, ev, evec);
            min_pair = std::min(min_pair, ev.front());
            for (int l = 0; l < d; ++l) total += ev[l];
            break;
          }
          default:
            break;
        }
      }
      mu_a = total / (deg_ + 1.0);
    };
    for (int bt = 0; bt < 60 && alpha2 > 1e-10; ++bt) {
      double mu_a, min_pair;
      pair_stats(alpha2, mu_a, min_pair);
      if (min_pair >= 3e-2 * mu_a && mu_a <= 1.05 * mu + 1e-300) break;
      alpha2 *= 0.9;
    }
    if (!(alpha2 > 1e-10)) {
      if (++small_steps >= 3) break;
    } else {
      small_steps = 0;
    }

    if (std::getenv("CPCONE_IPM_TRACE")) {
      const double orth = dot(dx2, ds2) + dtau2 * dkappa2;
      std::fprintf(stderr, "  aff: alpha %.3e dtau %.3e dkappa %.3e | sigma %.3e | comb: alpha %.3e dtau %.3e dkappa %.3e mu %.3e orth %.3e\n",
                   alpha, dtau, dkappa, sigma, alpha2, dtau2, dkappa2, mu, orth);
    }

    for (int i = 0; i < nvar_; ++i) x_[i] += alpha2 * dx2[i];
    for (int i = 0; i < mrow_; ++i) y_[i] += alpha2 * dy2[i];
    for (int i = 0; i < nvar_; ++i) s_[i] += alpha2 * ds2[i];
    tau_ += alpha2 * dtau2;
    kappa_ += alpha2 * dkappa2;
  }

  sol = best;
  sol.status = Status::kStalled;
  RVec fy(orig_rows_, 0.0);
  for (int i = 0; i < mrow_ && i < static_cast<int>(best.y.size()); ++i) fy[kept_rows_[i]] = best.y[i];
  sol.y = fy;
  return sol;
}

double cone_violation(const Block& blk, const double* v) {
  switch (blk.type) {
    case BlockType::kFree:
      return 0.0;
    case BlockType::kNonneg: {
      double m = 0.0;
      for (int i = 0; i < blk.dim; ++i) m = std::min(m, v[i]);
      return -m;
    }
    case BlockType::kSoc: {
      double z = 0.0;
      for (int i = 1; i < blk.dim; ++i) z += v[i] * v[i];
      return std::max(0.0, std::sqrt(z) - v[0]);
    }
    case BlockType::kPsd: {
      RVec m;
      smat(blk.dim, v, m);
      RVec ev, evec;
      jacobi_eig_symmetric(blk.dim, m, ev, evec);
      return std::max(0.0, -ev.front());
    }
  }
  return 0.0;
}

}  // namespace

Solution solve(const Program& p, const SolveOptions& opts) {
  Ipm ipm(p, opts);
  return ipm.run();
}

ResidualReport verify_solution(const Program& p, const Solution& sol, const SolveOptions& opts) {
  p.validate();
  const int n = p.num_vars();
  ResidualReport rep;
  if (static_cast<int>(sol.x.size()) != n || static_cast<int>(sol.s.size()) != n ||
      static_cast<int>(sol.y.size()) != p.num_rows)
    throw DimensionMismatch("verify_solution: shape mismatch");

  RVec ax(p.num_rows, 0.0), aty(n, 0.0);
  for (const auto& t : p.a) {
    ax[t.row] += t.val * sol.x[t.col];
    aty[t.col] += t.val * sol.y[t.row];
  }
  double bnorm = nrm2(p.b), cnorm = nrm2(p.c);

  int off = 0;
  for (const auto& blk : p.blocks) {
    const int len = block_len(blk);
    rep.cone_margin_x = std::max(rep.cone_margin_x, cone_violation(blk, &sol.x[off]));
    // dual cone of FREE is {0}
    if (blk.type == BlockType::kFree) {
      for (int i = 0; i < len; ++i) rep.cone_margin_s = std::max(rep.cone_margin_s, std::abs(sol.s[off + i]));
    } else {
      rep.cone_margin_s = std::max(rep.cone_margin_s, cone_violation(blk, &sol.s[off]));
    }
    off += len;
  }

  if (sol.status == Status::kOptimal || sol.status == Status::kStalled) {
    double pr = 0.0;
    for (int i = 0; i < p.num_rows; ++i) pr += (ax[i] - p.b[i]) * (ax[i] - p.b[i]);
    rep.primal_res = std::sqrt(pr) / (1.0 + bnorm);
    double dr = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = aty[i] + sol.s[i] - p.c[i];
      dr += v * v;
    }
    rep.dual_res = std::sqrt(dr) / (1.0 + cnorm);
    double cx = 0.0, by = 0.0;
    for (int i = 0; i < n; ++i) cx += p.c[i] * sol.x[i];
    for (int i = 0; i < p.num_rows; ++i) by += p.b[i] * sol.y[i];
    rep.rel_gap = std::abs(cx - by) / (1.0 + std::abs(cx) + std::abs(by));
    const double lim = 10.0 * std::max(opts.tol_feas, opts.tol_gap);
    rep.ok = sol.status == Status::kOptimal && rep.primal_res <= lim && rep.dual_res <= lim && rep.rel_gap <= lim &&
             rep.cone_margin_x <= lim && rep.cone_margin_s <= lim;
    rep.detail = "primal/dual residual check";
    return rep;
  }

  if (sol.status == Status::kPrimalInfeasible) {
    double by = 0.0;
    for (int i = 0; i < p.num_rows; ++i) by += p.b[i] * sol.y[i];
    rep.certificate_violation = by;
    double dr = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = aty[i] + sol.s[i];
      dr += v * v;
    }
    rep.dual_res = std::sqrt(dr) / (1.0 + cnorm);
    rep.ok = by >= 10.0 * opts.tol_feas && rep.dual_res <= 10.0 * opts.tol_feas && rep.cone_margin_s <= 10.0 * opts.tol_feas;
    rep.detail = "primal infeasibility ray: A^T y + s = 0, s in K*, b.y > 0";
    return rep;
  }

  // dual infeasible
  double cx = 0.0;
  for (int i = 0; i < n; ++i) cx += p.c[i] * sol.x[i];
  rep.certificate_violation = -cx;
  rep.primal_res = nrm2(ax) / (1.0 + bnorm);
  rep.ok = -cx >= 10.0 * opts.tol_feas && rep.primal_res <= 10.0 * opts.tol_feas && rep.cone_margin_x <= 10.0 * opts.tol_feas;
  rep.detail = "dual infeasibility ray: A x = 0, x in K, c.x < 0";
  return rep;
}

}  // namespace cpcone::conic
