#include <cmath>

#include "cpcone/conic.hpp"
#include "cpcone/linalg.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cpcone;
using namespace cpcone::conic;
using testutil::rng;

TEST_CASE("solver: trivial nonneg LP min x st x >= 0") {
  ProgramBuilder pb;
  const int blk = pb.add_nonneg_block(1);
  pb.obj_coeff(blk, 0, 1.0);
  auto sol = solve(pb.take());
  CHECK(sol.status == Status::kOptimal);
  CHECK(sol.primal_obj == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("solver: lambda_max of Pauli X via PSD block is 1") {
  // min t  s.t.  Z = t I - X  PSD
  ProgramBuilder pb;
  const int tb = pb.add_free_block(1);
  const int zb = pb.add_psd_block(2);
  pb.obj_coeff(tb, 0, 1.0);
  for (int i = 0; i < 2; ++i) {
    const int r = pb.new_row(0.0);  // Z_ii - t = -X_ii = 0
    pb.add_psd_coeff(r, zb, i, i, 1.0);
    pb.add_coeff(r, tb, 0, -1.0);
  }
  const int r = pb.new_row(-1.0);  // Z_01 = -X_01 = -1
  pb.add_psd_coeff(r, zb, 0, 1, 1.0);
  auto p = pb.take();
  auto sol = solve(p);
  CHECK(sol.status == Status::kOptimal);
  CHECK(sol.primal_obj == doctest::Approx(1.0).epsilon(1e-7));
  auto rep = verify_solution(p, sol);
  CHECK(rep.ok);
}

TEST_CASE("solver: SOC norm epigraph") {
  // min t s.t. || (3, 4) || <= t
  ProgramBuilder pb;
  const int sb = pb.add_soc_block(3);
  pb.obj_coeff(sb, 0, 1.0);
  const int r1 = pb.new_row(3.0);
  pb.add_coeff(r1, sb, 1, 1.0);
  const int r2 = pb.new_row(4.0);
  pb.add_coeff(r2, sb, 2, 1.0);
  auto sol = solve(pb.take());
  CHECK(sol.status == Status::kOptimal);
  CHECK(sol.primal_obj == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("solver: two-phase sum of norms equals sqrt(2)") {
  // min ||u0|| + ||u1||  s.t.  v0 - v1 = (1,-1)/sqrt(2), v_j >= 0, u_j = v_j
  ProgramBuilder pb;
  const int v0 = pb.add_nonneg_block(2);
  const int v1 = pb.add_nonneg_block(2);
  const int u0 = pb.add_soc_block(3);
  const int u1 = pb.add_soc_block(3);
  pb.obj_coeff(u0, 0, 1.0);
  pb.obj_coeff(u1, 0, 1.0);
  const double s2 = 1.0 / std::sqrt(2.0);
  const double rhs[2] = {s2, -s2};
  for (int i = 0; i < 2; ++i) {
    const int r = pb.new_row(rhs[i]);
    pb.add_coeff(r, v0, i, 1.0);
    pb.add_coeff(r, v1, i, -1.0);
  }
  for (int i = 0; i < 2; ++i) {
    int r = pb.new_row(0.0);
    pb.add_coeff(r, u0, 1 + i, 1.0);
    pb.add_coeff(r, v0, i, -1.0);
    r = pb.new_row(0.0);
    pb.add_coeff(r, u1, 1 + i, 1.0);
    pb.add_coeff(r, v1, i, -1.0);
  }
  auto p = pb.take();
  auto sol = solve(p);
  CHECK(sol.status == Status::kOptimal);
  CHECK(sol.primal_obj == doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
  CHECK(verify_solution(p, sol).ok);
}

TEST_CASE("solver: infeasible LP produces a validated certificate") {
  // x >= 0, x = -1
  ProgramBuilder pb;
  const int blk = pb.add_nonneg_block(1);
  pb.obj_coeff(blk, 0, 1.0);
  const int r = pb.new_row(-1.0);
  pb.add_coeff(r, blk, 0, 1.0);
  auto p = pb.take();
  auto sol = solve(p);
  CHECK(sol.status == Status::kPrimalInfeasible);
  auto rep = verify_solution(p, sol);
  CHECK(rep.ok);
  CHECK(rep.certificate_violation >= 10.0 * 1e-9);
}

TEST_CASE("solver: perturbed primal is flagged by verify_solution") {
  ProgramBuilder pb;
  const int blk = pb.add_nonneg_block(2);
  pb.obj_coeff(blk, 0, 1.0);
  pb.obj_coeff(blk, 1, 2.0);
  const int r = pb.new_row(1.0);
  pb.add_coeff(r, blk, 0, 1.0);
  pb.add_coeff(r, blk, 1, 1.0);
  auto p = pb.take();
  auto sol = solve(p);
  CHECK(sol.status == Status::kOptimal);
  CHECK(verify_solution(p, sol).ok);
  sol.x[0] += 1e-3;
  auto rep = verify_solution(p, sol);
  CHECK(rep.primal_res > 1e-4);
  CHECK_FALSE(rep.ok);
}

TEST_CASE("solver: random mixed-cone programs satisfy weak duality and determinism") {
  auto g = rng(9001);
  for (int trial = 0; trial < 8; ++trial) {
    ProgramBuilder pb;
    const int nn = pb.add_nonneg_block(3);
    const int sc = pb.add_soc_block(3);
    const int ps = pb.add_psd_block(3);
    const int fr = pb.add_free_block(2);

    // strictly feasible primal point
    std::vector<double> x0;
    for (int i = 0; i < 3; ++i) x0.push_back(0.5 + testutil::unif(g));
    {
      const double z1 = testutil::gauss(g) * 0.3, z2 = testutil::gauss(g) * 0.3;
      x0.push_back(std::hypot(z1, z2) + 0.5 + testutil::unif(g));
      x0.push_back(z1);
      x0.push_back(z2);
    }
    {
      auto h = testutil::random_hermitian(3, g);
      auto m = h.mat().real_part();
      m = 0.5 * (m + m.transpose());
      auto sp = eig_hermitian(HermitianMatrix(m));
      const double shift = std::max(0.0, -sp.eigenvalues.front()) + 0.5;
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i <= j; ++i) {
          const double v = m(i, j).real() + (i == j ? shift : 0.0);
          x0.push_back(i == j ? v : std::sqrt(2.0) * v);
        }
    }
    x0.push_back(testutil::gauss(g));
    x0.push_back(testutil::gauss(g));

    // random rows
    const int m_rows = 4;
    std::vector<std::vector<double>> rows(m_rows, std::vector<double>(x0.size()));
    for (auto& row : rows)
      for (auto& v : row) v = testutil::gauss(g);
    for (int r = 0; r < m_rows; ++r) {
      double rhs = 0.0;
      for (size_t j = 0; j < x0.size(); ++j) rhs += rows[r][j] * x0[j];
      const int rr = pb.new_row(rhs);
      int col = 0;
      for (int b : {nn}) {
        for (int i = 0; i < 3; ++i) pb.add_coeff(rr, b, i, rows[r][col++]);
      }
      for (int i = 0; i < 3; ++i) pb.add_coeff(rr, sc, i, rows[r][col++]);
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i <= j; ++i) {
          // coefficient applied directly in svec coordinates
          const double v = rows[r][col++];
          pb.add_psd_coeff(rr, ps, i, j, i == j ? v : v / std::sqrt(2.0));
        }
      for (int i = 0; i < 2; ++i) pb.add_coeff(rr, fr, i, rows[r][col++]);
    }

    // dual-feasible objective: c = A^T y0 + s0, s0 interior (0 on free)
    std::vector<double> s0;
    for (int i = 0; i < 3; ++i) s0.push_back(0.5 + testutil::unif(g));
    {
      const double z1 = testutil::gauss(g) * 0.3, z2 = testutil::gauss(g) * 0.3;
      s0.push_back(std::hypot(z1, z2) + 0.5);
      s0.push_back(z1);
      s0.push_back(z2);
    }
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i <= j; ++i) s0.push_back(i == j ? 1.0 : 0.0);
    s0.push_back(0.0);
    s0.push_back(0.0);
    std::vector<double> y0(m_rows);
    for (auto& v : y0) v = testutil::gauss(g);
    std::vector<double> cvec(x0.size(), 0.0);
    for (int r = 0; r < m_rows; ++r)
      for (size_t j = 0; j < x0.size(); ++j) cvec[j] += rows[r][j] * y0[r];
    for (size_t j = 0; j < cvec.size(); ++j) cvec[j] += s0[j];
    {
      int col = 0;
      for (int i = 0; i < 3; ++i) pb.obj_coeff(nn, i, cvec[col++]);
      for (int i = 0; i < 3; ++i) pb.obj_coeff(sc, i, cvec[col++]);
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i <= j; ++i) {
          const double v = cvec[col++];
          pb.obj_psd_coeff(ps, i, j, i == j ? v : v / std::sqrt(2.0));
        }
      for (int i = 0; i < 2; ++i) pb.obj_coeff(fr, i, cvec[col++]);
    }

    auto p = pb.take();
    auto sol = solve(p);
    REQUIRE(sol.status == Status::kOptimal);
    CHECK(sol.primal_obj >= sol.dual_obj - 1e-7 * (1.0 + std::abs(sol.primal_obj)));
    CHECK(verify_solution(p, sol).ok);

    auto sol2 = solve(p);
    CHECK(sol2.status == sol.status);
    CHECK(sol2.primal_obj == doctest::Approx(sol.primal_obj).epsilon(1e-12));
  }
}

TEST_CASE("solver: realified Hermitian PSD feasibility matches eigenvalue check") {
  auto g = rng(9002);
  int agree = 0;
  for (int trial = 0; trial < 12; ++trial) {
    auto h = testutil::random_hermitian(3, g);
    // shift so that both feasible and infeasible cases occur
    auto shifted = HermitianMatrix(h.mat() + (testutil::gauss(g) * 0.8) * ComplexMatrix::identity(3));
    ProgramBuilder pb;
    auto hb = pb.add_hermitian_psd_block(3);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const int r = pb.new_row(shifted(i, j).real());
        pb.add_herm_re_coeff(r, hb, i, j, 1.0);
        if (i != j) {
          const int r2 = pb.new_row(shifted(i, j).imag());
          pb.add_herm_im_coeff(r2, hb, i, j, 1.0);
        }
      }
    auto p = pb.take();
    auto sol = solve(p);
    const double minev = min_eigenvalue(shifted);
    if (minev > 1e-6) {
      CHECK(sol.status == Status::kOptimal);
      auto x = pb.hermitian_matrix(hb, sol.x);
      CHECK((x - shifted.mat()).frobenius_norm() <= 1e-6 * (1.0 + shifted.frobenius_norm()));
      ++agree;
    } else if (minev < -1e-6) {
      CHECK(sol.status == Status::kPrimalInfeasible);
      ++agree;
    }
  }
  CHECK(agree >= 8);  // most draws are clearly one side or the other
}

TEST_CASE("solver: rejects bad programs") {
  ProgramBuilder pb;
  const int blk = pb.add_nonneg_block(1);
  pb.obj_coeff(blk, 0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(pb.take(), BadProgram);
}
