#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpcone/matrix.hpp"

namespace cpcone::conic {

enum class BlockType { kFree, kNonneg, kSoc, kPsd };

/// One cone block. For kPsd, dim is the matrix side; the variable segment
/// stores svec(X) of length dim*(dim+1)/2 with off-diagonals scaled by
/// sqrt(2) so that <svec(X), svec(Y)> = Tr(XY).
struct Block {
  BlockType type;
  int dim;
};

int block_len(const Block& b);
int svec_len(int d);
int svec_index(int i, int j);  // i <= j, upper triangle by columns

/// Standard-form cone program:  min c.x  s.t.  A x = b,  x in K.
struct Triplet {
  int row;
  int col;
  double val;
};

struct Program {
  std::vector<Block> blocks;
  std::vector<double> c;
  std::vector<Triplet> a;
  std::vector<double> b;
  int num_rows = 0;

  int num_vars() const;
  void validate() const;  // throws BadProgram
};

enum class Status { kOptimal, kPrimalInfeasible, kDualInfeasible, kStalled };

std::string status_name(Status s);

/// Solution in user scale. For kOptimal, (x, y, s) is the primal/dual pair.
/// For kPrimalInfeasible, (y, s) is a ray with A^T y + s = 0, s in K*,
/// b.y = 1. For kDualInfeasible, x is a ray with A x = 0, x in K, c.x = -1.
struct Solution {
  Status status = Status::kStalled;
  std::vector<double> x, y, s;
  double primal_obj = 0.0, dual_obj = 0.0;
  double primal_res = 0.0, dual_res = 0.0, rel_gap = 0.0;
  int iterations = 0;
};

struct SolveOptions {
  double tol_feas = 1e-9;
  double tol_gap = 1e-9;
  int max_iter = 200;
};

Solution solve(const Program& p, const SolveOptions& opts = {});

/// Residuals recomputed from scratch, plus cone membership margins
/// (min eigenvalue / orthant / SOC slack over all blocks).
struct ResidualReport {
  double primal_res = 0.0;
  double dual_res = 0.0;
  double rel_gap = 0.0;
  double cone_margin_x = 0.0;  // most negative cone violation of x (0 if inside)
  double cone_margin_s = 0.0;
  double certificate_violation = 0.0;  // for infeasible statuses
  bool ok = false;
  std::string detail;
};

ResidualReport verify_solution(const Program& p, const Solution& s, const SolveOptions& opts = {});

void dump_program_json(const Program& p, const std::string& path);

// --- construction helpers -------------------------------------------------

/// Handle for a Hermitian PSD matrix variable embedded as the real
/// symmetric block [[R, -S], [S, R]] of size 2n, with structure rows
/// tying the two copies together.
struct HermBlock {
  int block = -1;
  int n = 0;
};

class ProgramBuilder {
 public:
  int add_free_block(int d);
  int add_nonneg_block(int d);
  int add_soc_block(int d);
  int add_psd_block(int d);
  HermBlock add_hermitian_psd_block(int n);

  int new_row(double rhs);
  void add_rhs(int row, double delta);

  // gamma * x[idx] for vector blocks
  void add_coeff(int row, int block, int idx, double gamma);
  // gamma * X_ij (symmetric reading, i<=j or i>j both fine) for PSD blocks
  void add_psd_coeff(int row, int block, int i, int j, double gamma);
  // gamma * Re(X_ij) / gamma * Im(X_ij) for Hermitian blocks (Im requires i != j)
  void add_herm_re_coeff(int row, const HermBlock& hb, int i, int j, double gamma);
  void add_herm_im_coeff(int row, const HermBlock& hb, int i, int j, double gamma);

  void obj_coeff(int block, int idx, double gamma);
  void obj_psd_coeff(int block, int i, int j, double gamma);
  void obj_herm_re_coeff(const HermBlock& hb, int i, int j, double gamma);
  void obj_herm_im_coeff(const HermBlock& hb, int i, int j, double gamma);

  int block_offset(int block) const { return offsets_.at(block); }
  const Program& program() const { return p_; }
  Program take();

  // solution readers
  ComplexMatrix psd_matrix(int block, const std::vector<double>& x) const;       // real symmetric
  ComplexMatrix hermitian_matrix(const HermBlock& hb, const std::vector<double>& x) const;
  double scalar(int block, int idx, const std::vector<double>& x) const;

 private:
  int add_block(BlockType t, int d);
  Program p_;
  std::vector<int> offsets_;
};

}  // namespace cpcone::conic
