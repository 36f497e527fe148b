#include "kgscat/frame.hpp"

#include <random>

namespace kgscat {

namespace {
const cplx kI(0.0, 1.0);
}

Mat block2(const Mat& m00, const Mat& m01, const Mat& m10, const Mat& m11) {
  int N = int(m00.rows());
  Mat M(2 * N, 2 * N);
  M.topLeftCorner(N, N) = m00;
  M.topRightCorner(N, N) = m01;
  M.bottomLeftCorner(N, N) = m10;
  M.bottomRightCorner(N, N) = m11;
  return M;
}

Mat block_of(const Mat& M, int row, int col) {
  int N = int(M.rows()) / 2;
  return M.block(row * N, col * N, N, N);
}

Mat block_diag2(const Mat& m00, const Mat& m11) {
  Mat z = Mat::Zero(m00.rows(), m00.cols());
  return block2(m00, z, z, m11);
}

Mat block_scalar(const Mat& m) { return block_diag2(m, m); }

Mat q_matrix(int N) {
  Mat I = Mat::Identity(N, N), Z = Mat::Zero(N, N);
  return block2(Z, I, I, Z);
}

Mat q_ad_matrix(int N) {
  Mat I = Mat::Identity(N, N), Z = Mat::Zero(N, N);
  return block2(I, Z, Z, -I);
}

Mat pi_plus(int N) {
  Mat I = Mat::Identity(N, N), Z = Mat::Zero(N, N);
  return block2(I, Z, Z, Z);
}

Mat pi_minus(int N) {
  Mat I = Mat::Identity(N, N), Z = Mat::Zero(N, N);
  return block2(Z, Z, Z, I);
}

Mat block_weighted_adjoint(const Mat& M, const Weight& W) {
  int N = int(M.rows()) / 2;
  Mat out(2 * N, 2 * N);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      out.block(r * N, c * N, N, N) = W.Winv * block_of(M, c, r).adjoint() * W.W;
  return out;
}

Mat DiagFrame::S_at(int i) const {
  Mat gapinv = gap_half_inv.at(i) * gap_half_inv.at(i);
  const cplx inv_i = 1.0 / kI;
  return inv_i * block2(gapinv, -gapinv, b_plus.at(i) * gapinv, -b_minus.at(i) * gapinv);
}

Mat DiagFrame::S_inv_at(int i) const {
  int N = basis.N;
  Mat I = Mat::Identity(N, N);
  return kI * block2(-b_minus.at(i), I, -b_plus.at(i), I);
}

Mat DiagFrame::T_at(int i) const {
  const Mat& Xi = gap_half_inv.at(i);
  const cplx inv_i = 1.0 / kI;
  return inv_i * block2(Xi, -Xi, b_plus.at(i) * Xi, -b_minus.at(i) * Xi);
}

Mat DiagFrame::T_inv_at(int i) const {
  const Mat& Xi = gap_half_inv.at(i);
  int N = basis.N;
  Mat I = Mat::Identity(N, N);
  return kI * block2(-Xi * b_minus.at(i), Xi, -Xi * b_plus.at(i), Xi);
}

Mat DiagFrame::B_at(int i, const Mat& r_op) const {
  Mat gapinv = gap_half_inv.at(i) * gap_half_inv.at(i);
  Mat rp = res_plus.at(i) * gapinv;
  Mat rm = res_minus.at(i) * gapinv;
  Mat base = block_diag2(-b_minus.at(i) + kI * r_op, -b_plus.at(i) + kI * r_op);
  return base - block2(rm, -rm, rp, -rp);
}

Mat DiagFrame::H_ad_at(int i, const Mat& r_op) const {
  const Mat& X = gap_half.at(i);
  const Mat& Xi = gap_half_inv.at(i);
  Mat B = B_at(i, r_op);
  Mat H(B.rows(), B.cols());
  int N = basis.N;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) H.block(r * N, c * N, N, N) = Xi * block_of(B, r, c) * X;
  Mat shift = kI * dgap_half_inv.at(i) * X;
  H.topLeftCorner(N, N) -= shift;
  H.bottomRightCorner(N, N) -= shift;
  return H;
}

Mat DiagFrame::H_d_at(int i) const { return block_diag2(eps_plus.at(i), eps_minus.at(i)); }

Mat DiagFrame::V_ad_at(int i, const Mat& r_op) const { return H_ad_at(i, r_op) - H_d_at(i); }

DiagFrame build_frame(const RiccatiSolution& sol, const ModelCoefficients& model) {
  require(!sol.res_plus.mats.empty(), errc::invalid_data,
          "riccati residuals must be computed before building the frame");
  DiagFrame f;
  f.grid = sol.grid;
  f.basis = sol.basis;
  f.b_plus = sol.b;
  f.b_minus = sol.b_minus;
  f.res_plus = sol.res_plus;
  f.res_minus = sol.res_minus;
  int n = f.grid.n_nodes;

  f.gap_half.grid = f.grid;
  f.gap_half_inv.grid = f.grid;
  f.gap_half.mats.resize(n);
  f.gap_half_inv.mats.resize(n);
  for (int i = 0; i < n; ++i) {
    WeightedEig e = weighted_eig(sol.b.at(i) - sol.b_minus.at(i), model.weight_at(i));
    require(e.evals.minCoeff() > 0, errc::not_positive,
            "frequency gap not positive; run enforce_gap first");
    f.gap_half.mats[i] = apply_spectral(e, [](double x) { return std::sqrt(x); });
    f.gap_half_inv.mats[i] = apply_spectral(e, [](double x) { return 1.0 / std::sqrt(x); });
  }
  f.dgap_half_inv = f.gap_half_inv.time_derivative();

  f.eps_plus.grid = f.grid;
  f.eps_minus.grid = f.grid;
  f.r_b_plus.grid = f.grid;
  f.r_b_minus.grid = f.grid;
  f.eps_plus.mats.resize(n);
  f.eps_minus.mats.resize(n);
  f.r_b_plus.mats.resize(n);
  f.r_b_minus.mats.resize(n);
  for (int i = 0; i < n; ++i) {
    const Weight& W = model.weight_at(i);
    Mat r_op = model.r_op_at(i);
    Mat H = f.H_ad_at(i, r_op);
    Mat D0 = block_of(H, 0, 0);
    Mat D1 = block_of(H, 1, 1);
    f.eps_plus.mats[i] = 0.5 * (D0 + weighted_adjoint(D0, W));
    f.eps_minus.mats[i] = 0.5 * (D1 + weighted_adjoint(D1, W));

    const Mat& X = f.gap_half.at(i);
    const Mat& Xi = f.gap_half_inv.at(i);
    Mat shift = kI * f.dgap_half_inv.at(i) * X;
    f.r_b_plus.mats[i] = kI * r_op + Xi * sol.b.at(i) - sol.b.at(i) * Xi - shift;
    f.r_b_minus.mats[i] = kI * r_op + Xi * sol.b_minus.at(i) - sol.b_minus.at(i) * Xi - shift;
  }
  return f;
}

double check_symplectic_frame(const DiagFrame& frame, const ModelCoefficients& model) {
  int N = frame.basis.N;
  Mat q = q_matrix(N);
  Mat qad = q_ad_matrix(N);
  double worst = 0;
  for (int i = 0; i < frame.grid.n_nodes; ++i) {
    Mat T = frame.T_at(i);
    Mat lhs = block_weighted_adjoint(T, model.weight_at(i)) * q * T;
    worst = std::max(worst, op_norm(lhs - qad));
  }
  return worst;
}

double check_factorization(const RiccatiSolution& sol, const ModelCoefficients& model,
                           int probes, unsigned seed) {
  // Space-time probes band-limited in both variables; all time derivatives
  // realized with the same grid stencils on the node sequence.
  const TimeGrid& g = sol.grid;
  const ModeBasis& bb = sol.basis;
  int n = g.n_nodes, N = bb.N;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  Mat E = mode_to_grid_matrix(bb);
  double span = g.t_max - g.t_min;
  int kt_max = 3;
  int kx_max = std::max(1, bb.K / 2);

  auto d_t = [&](const std::vector<Vec>& u) {
    std::vector<Vec> d(n);
    for (int i = 0; i < n; ++i) {
      Stencil s = derivative_stencil(i, n, g.dt);
      Vec acc = Vec::Zero(N);
      for (int k = 0; k < 5; ++k) acc += s.w[k] * u[i + s.offsets[k]];
      d[i] = acc;
    }
    return d;
  };

  double worst = 0;
  for (int p = 0; p < probes; ++p) {
    // u(t, x): few low space-time Fourier modes with random amplitudes
    std::vector<Vec> u(n, Vec::Zero(N));
    for (int kt = -kt_max; kt <= kt_max; ++kt) {
      Vec chat = Vec::Zero(N);
      for (int j = 0; j < N; ++j)
        if (std::abs(bb.mode(j)) <= kx_max) chat[j] = cplx(unif(rng), unif(rng));
      Vec cx = E * chat;
      for (int i = 0; i < n; ++i) {
        cplx ph = std::exp(cplx(0, 2.0 * pi * kt * (g.node(i) - g.t_min) / span));
        u[i] += ph * cx;
      }
    }
    for (int sgn = 0; sgn < 2; ++sgn) {
      const OpFamily& b = sgn == 0 ? sol.b : sol.b_minus;
      const OpFamily& res = sgn == 0 ? sol.res_plus : sol.res_minus;
      std::vector<Vec> bu(n), du = d_t(u);
      for (int i = 0; i < n; ++i) bu[i] = du[i] - kI * (b.at(i) * u[i]);
      std::vector<Vec> dbu = d_t(bu);
      double err = 0;
      std::vector<Vec> d2u = d_t(du);
      for (int i = kGridTrim; i < n - kGridTrim; ++i) {
        Vec lhs = dbu[i] + kI * (b.at(i) * bu[i]) + model.r_op_at(i) * bu[i];
        Vec rhs = d2u[i] + model.r_op_at(i) * du[i] + model.a_at(i) * u[i] - res.at(i) * u[i];
        double scale = std::max(1.0, std::sqrt(u[i].squaredNorm()));
        err = std::max(err, (lhs - rhs).cwiseAbs().maxCoeff() / scale);
      }
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace kgscat
