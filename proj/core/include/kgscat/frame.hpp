#pragma once

#include "kgscat/riccati.hpp"

namespace kgscat {

// 2x2-block operators on Cauchy-data pairs are plain (2N)x(2N) matrices with
// component-major layout: index = component * N + mode.
Mat block2(const Mat& m00, const Mat& m01, const Mat& m10, const Mat& m11);
Mat block_of(const Mat& M, int row, int col);
Mat block_diag2(const Mat& m00, const Mat& m11);
Mat block_scalar(const Mat& m);  // diag(m, m)

// constant symplectic pairing [[0, I], [I, 0]] and its diagonalized form
Mat q_matrix(int N);
Mat q_ad_matrix(int N);
Mat pi_plus(int N);
Mat pi_minus(int N);

// block adjoint in the (W + W)-weighted pairing
Mat block_weighted_adjoint(const Mat& M, const Weight& W);

// Frequency-splitting frame built from a Riccati solution: T(t) conjugates
// the Cauchy evolution into an almost-diagonal one with generator
// H_ad = H_d + V_ad, H_d = diag(eps_plus, -|eps_minus|...) self-adjoint
// blockwise, V_ad smoothing and time-decaying.
struct DiagFrame {
  TimeGrid grid;
  ModeBasis basis;
  OpFamily b_plus, b_minus;
  OpFamily gap_half, gap_half_inv;  // (b+ - b-)^{+-1/2}
  OpFamily dgap_half_inv;           // d/dt of the inverse root family
  OpFamily res_plus, res_minus;     // Riccati residuals (drive the off-diagonal part)
  OpFamily eps_plus, eps_minus;     // symmetrized diagonal generator blocks
  OpFamily r_b_plus, r_b_minus;

  Mat S_at(int i) const;
  Mat S_inv_at(int i) const;
  Mat T_at(int i) const;
  Mat T_inv_at(int i) const;
  Mat B_at(int i, const Mat& r_op) const;
  Mat H_ad_at(int i, const Mat& r_op) const;
  Mat H_d_at(int i) const;
  Mat V_ad_at(int i, const Mat& r_op) const;
};

DiagFrame build_frame(const RiccatiSolution& sol, const ModelCoefficients& model);

// max over nodes of || T*(t) q T(t) - q_ad || in the weighted block pairing
double check_symplectic_frame(const DiagFrame& frame, const ModelCoefficients& model);

// Applies both sides of the factorized Klein-Gordon operator to random
// band-limited space-time probes; the discrepancy beyond the forwarded
// Riccati residual measures the differentiation-stencil floor.
double check_factorization(const RiccatiSolution& sol, const ModelCoefficients& model,
                           int probes, unsigned seed = 7);

}  // namespace kgscat
