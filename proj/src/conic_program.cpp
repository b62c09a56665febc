#include <cmath>
#include <fstream>

#include "cpcone/conic.hpp"

namespace cpcone::conic {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

int svec_len(int d) { return d * (d + 1) / 2; }

int svec_index(int i, int j) {
  // upper triangle stored by columns: (0,0), (0,1), (1,1), (0,2), ...
  return j * (j + 1) / 2 + i;
}

int block_len(const Block& b) { return b.type == BlockType::kPsd ? svec_len(b.dim) : b.dim; }

int Program::num_vars() const {
  int n = 0;
  for (const auto& blk : blocks) n += block_len(blk);
  return n;
}

void Program::validate() const {
  if (blocks.empty()) throw BadProgram("program has no blocks");
  for (const auto& blk : blocks)
    if (blk.dim <= 0) throw BadProgram("block with non-positive dimension");
  const int n = num_vars();
  if (static_cast<int>(c.size()) != n) throw BadProgram("objective length != variable count");
  if (static_cast<int>(b.size()) != num_rows) throw BadProgram("rhs length != row count");
  for (double v : c)
    if (!std::isfinite(v)) throw BadProgram("non-finite objective");
  for (double v : b)
    if (!std::isfinite(v)) throw BadProgram("non-finite rhs");
  for (const auto& t : a) {
    if (t.row < 0 || t.row >= num_rows || t.col < 0 || t.col >= n) throw BadProgram("triplet out of range");
    if (!std::isfinite(t.val)) throw BadProgram("non-finite constraint coefficient");
  }
}

std::string status_name(Status s) {
  switch (s) {
    case Status::kOptimal: return "OPTIMAL";
    case Status::kPrimalInfeasible: return "PRIMAL_INFEASIBLE";
    case Status::kDualInfeasible: return "DUAL_INFEASIBLE";
    case Status::kStalled: return "STALLED";
  }
  return "?";
}

// --- builder ---------------------------------------------------------------

int ProgramBuilder::add_block(BlockType t, int d) {
  if (d <= 0) throw BadProgram("block dimension must be positive");
  offsets_.push_back(p_.num_vars());
  p_.blocks.push_back(Block{t, d});
  p_.c.resize(p_.num_vars(), 0.0);
  return static_cast<int>(p_.blocks.size()) - 1;
}

int ProgramBuilder::add_free_block(int d) { return add_block(BlockType::kFree, d); }
int ProgramBuilder::add_nonneg_block(int d) { return add_block(BlockType::kNonneg, d); }
int ProgramBuilder::add_soc_block(int d) { return add_block(BlockType::kSoc, d); }
int ProgramBuilder::add_psd_block(int d) { return add_block(BlockType::kPsd, d); }

HermBlock ProgramBuilder::add_hermitian_psd_block(int n) {
  HermBlock hb;
  hb.n = n;
  hb.block = add_psd_block(2 * n);
  // structure rows: Y[i][j] = Y[n+i][n+j], Y[i][n+j] = -Y[j][n+i], Y[i][n+i] = 0
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int r = new_row(0.0);
      add_psd_coeff(r, hb.block, i, j, 1.0);
      add_psd_coeff(r, hb.block, n + i, n + j, -1.0);
    }
  }
  for (int i = 0; i < n; ++i) {
    const int r = new_row(0.0);
    add_psd_coeff(r, hb.block, i, n + i, 1.0);
    for (int j = i + 1; j < n; ++j) {
      const int r2 = new_row(0.0);
      add_psd_coeff(r2, hb.block, i, n + j, 1.0);
      add_psd_coeff(r2, hb.block, j, n + i, 1.0);
    }
  }
  return hb;
}

int ProgramBuilder::new_row(double rhs) {
  p_.b.push_back(rhs);
  return p_.num_rows++;
}

void ProgramBuilder::add_rhs(int row, double delta) { p_.b.at(row) += delta; }

void ProgramBuilder::add_coeff(int row, int block, int idx, double gamma) {
  if (gamma == 0.0) return;
  const Block& blk = p_.blocks.at(block);
  if (blk.type == BlockType::kPsd) throw BadProgram("use add_psd_coeff for PSD blocks");
  if (idx < 0 || idx >= blk.dim) throw BadProgram("coefficient index out of range");
  p_.a.push_back({row, offsets_[block] + idx, gamma});
}

void ProgramBuilder::add_psd_coeff(int row, int block, int i, int j, double gamma) {
  if (gamma == 0.0) return;
  const Block& blk = p_.blocks.at(block);
  if (blk.type != BlockType::kPsd) throw BadProgram("add_psd_coeff on non-PSD block");
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= blk.dim) throw BadProgram("psd coefficient index out of range");
  const double v = (i == j) ? gamma : gamma / kSqrt2;
  p_.a.push_back({row, offsets_[block] + svec_index(i, j), v});
}

void ProgramBuilder::add_herm_re_coeff(int row, const HermBlock& hb, int i, int j, double gamma) {
  if (gamma == 0.0) return;
  const int n = hb.n;
  if (i > j) std::swap(i, j);
  add_psd_coeff(row, hb.block, i, j, 0.5 * gamma);
  add_psd_coeff(row, hb.block, n + i, n + j, 0.5 * gamma);
}

void ProgramBuilder::add_herm_im_coeff(int row, const HermBlock& hb, int i, int j, double gamma) {
  if (gamma == 0.0) return;
  const int n = hb.n;
  if (i == j) throw BadProgram("imaginary part of a diagonal Hermitian entry");
  double sign = 1.0;
  if (i > j) {  // Im(X_ji) = -Im(X_ij)
    std::swap(i, j);
    sign = -1.0;
  }
  // Im(X_ij) = S_ij = Y[j][n+i] = -Y[i][n+j]
  add_psd_coeff(row, hb.block, j, n + i, 0.5 * sign * gamma);
  add_psd_coeff(row, hb.block, i, n + j, -0.5 * sign * gamma);
}

void ProgramBuilder::obj_coeff(int block, int idx, double gamma) {
  const Block& blk = p_.blocks.at(block);
  if (blk.type == BlockType::kPsd) throw BadProgram("use obj_psd_coeff for PSD blocks");
  p_.c.at(offsets_[block] + idx) += gamma;
}

void ProgramBuilder::obj_psd_coeff(int block, int i, int j, double gamma) {
  if (gamma == 0.0) return;
  const Block& blk = p_.blocks.at(block);
  if (blk.type != BlockType::kPsd) throw BadProgram("obj_psd_coeff on non-PSD block");
  if (i > j) std::swap(i, j);
  const double v = (i == j) ? gamma : gamma / kSqrt2;
  p_.c.at(offsets_[block] + svec_index(i, j)) += v;
}

void ProgramBuilder::obj_herm_re_coeff(const HermBlock& hb, int i, int j, double gamma) {
  if (gamma == 0.0) return;
  const int n = hb.n;
  if (i > j) std::swap(i, j);
  obj_psd_coeff(hb.block, i, j, 0.5 * gamma);
  obj_psd_coeff(hb.block, n + i, n + j, 0.5 * gamma);
}

void ProgramBuilder::obj_herm_im_coeff(const HermBlock& hb, int i, int j, double gamma) {
  if (gamma == 0.0) return;
  const int n = hb.n;
  if (i == j) throw BadProgram("imaginary part of a diagonal Hermitian entry");
  double sign = 1.0;
  if (i > j) {
    std::swap(i, j);
    sign = -1.0;
  }
  obj_psd_coeff(hb.block, j, n + i, 0.5 * sign * gamma);
  obj_psd_coeff(hb.block, i, n + j, -0.5 * sign * gamma);
}

Program ProgramBuilder::take() {
  p_.validate();
  return std::move(p_);
}

ComplexMatrix ProgramBuilder::psd_matrix(int block, const std::vector<double>& x) const {
  const Block& blk = p_.blocks.at(block);
  if (blk.type != BlockType::kPsd) throw BadProgram("psd_matrix on non-PSD block");
  const int d = blk.dim;
  const int off = offsets_[block];
  ComplexMatrix m(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      const double v = x.at(off + svec_index(i, j));
      const double e = (i == j) ? v : v / kSqrt2;
      m(i, j) = e;
      m(j, i) = e;
    }
  return m;
}

ComplexMatrix ProgramBuilder::hermitian_matrix(const HermBlock& hb, const std::vector<double>& x) const {
  const ComplexMatrix y = psd_matrix(hb.block, x);
  const int n = hb.n;
  ComplexMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double re = 0.5 * (y(i, j).real() + y(n + i, n + j).real());
      const double im = 0.5 * (y(j, n + i).real() - y(i, n + j).real());
      m(i, j) = cxd(re, (i == j) ? 0.0 : im);
    }
  // symmetrize exactly
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const cxd v = 0.5 * (m(i, j) + std::conj(m(j, i)));
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  return m;
}

double ProgramBuilder::scalar(int block, int idx, const std::vector<double>& x) const {
  return x.at(offsets_.at(block) + idx);
}

void dump_program_json(const Program& p, const std::string& path) {
  std::ofstream os(path);
  os << "{\n  \"blocks\": [";
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    const char* t = "";
    switch (p.blocks[i].type) {
      case BlockType::kFree: t = "FREE"; break;
      case BlockType::kNonneg: t = "NONNEG"; break;
      case BlockType::kSoc: t = "SOC"; break;
      case BlockType::kPsd: t = "PSD"; break;
    }
    os << (i ? ", " : "") << "{\"type\": \"" << t << "\", \"dim\": " << p.blocks[i].dim << "}";
  }
  os << "],\n  \"num_rows\": " << p.num_rows << ",\n  \"c\": [";
  for (size_t i = 0; i < p.c.size(); ++i) os << (i ? ", " : "") << p.c[i];
  os << "],\n  \"b\": [";
  for (size_t i = 0; i < p.b.size(); ++i) os << (i ? ", " : "") << p.b[i];
  os << "],\n  \"A\": [";
  for (size_t i = 0; i < p.a.size(); ++i)
    os << (i ? ", " : "") << "[" << p.a[i].row << ", " << p.a[i].col << ", " << p.a[i].val << "]";
  os << "]\n}\n";
}

}  // namespace cpcone::conic
