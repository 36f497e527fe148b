#pragma once

#include <optional>

#include "kgscat/evolution.hpp"

namespace kgscat {

// Separable reduced models a(t) = phi2(t) A1 + v(t), r(t) scalar, share one
// time-independent eigenframe; the whole pipeline then decouples into 2x2
// systems per eigenmode. Detected, never assumed: the residuals of the
// separability fits must sit at round-off.
struct ModeDecomposition {
  ModeBasis basis;
  TimeGrid grid;
  Weight W_ref;
  Mat Q, Qinv;         // W_ref-orthonormal eigenframe of A1
  Eigen::VectorXd mu;  // eigenvalues of A1 (>= 0)

  std::vector<RJet> phi2;  // [node] Laplacian prefactor jets
  std::vector<RJet> pot;   // [node] scalar potential jets
  std::vector<RJet> rho;   // [node] scalar damping jets
  double phi2_out = 1, phi2_in = 1, pot_out = 0, pot_in = 0;
  Eigen::VectorXd alpha_out, alpha_in;

  CJet alpha_jet(int node, int j) const;
  CJet rho_jet(int node) const;

  // dense 2Nx2N from per-mode 2x2 blocks
  Mat assemble(const std::vector<Eigen::Matrix2cd>& blocks) const;
  Mat assemble_scalar(const Vec& diag) const;  // NxN from per-mode scalars
};

std::optional<ModeDecomposition> detect_separable(const ModelCoefficients& mc,
                                                  double tol = 1e-10);

// Scalar Riccati + frame curves per (node, mode), all time derivatives exact
// through the jet arithmetic.
struct ModeFrameCurves {
  int n_iter = 0;
  // [node][mode]
  std::vector<std::vector<CJet>> eps, b, res;
  std::vector<std::vector<CJet>> h11, h22, h12, h21;  // almost-diagonal generator
};

ModeFrameCurves mode_riccati_frame(const ModeDecomposition& md, int n_max, double gap_floor);

// 2x2 evolution of one mode: direct generator [[0,1],[alpha, i rho]] or the
// almost-diagonal generator from the frame curves.
Eigen::Matrix2cd mode_evolve_direct(const ModeDecomposition& md, int j, double t, double s,
                                    double rtol, double atol);
Eigen::Matrix2cd mode_evolve_frame(const ModeDecomposition& md, const ModeFrameCurves& fc, int j,
                                   double t, double s, double rtol, double atol);

// per-mode reference and vacuum covariances
Eigen::Matrix2cd mode_cref_plus(const ModeFrameCurves& fc, int node, int j);
Eigen::Matrix2cd mode_vac_plus(double alpha_asym);

struct ModeScattering {
  std::vector<double> sample_times;
  std::vector<double> increments;  // weighted-frame operator norm
  // per-mode direct samples at the last time and the extrapolated limit
  std::vector<Eigen::Matrix2cd> c_plus_limit;
  // difference-route integral G(T) per mode plus recorded boundary norm
  std::vector<Eigen::Matrix2cd> g_integral;
  double boundary_term_norm = 0;  // ||U^ad (E pi E^{-1} - pi) U^ad|| at T_max, dropped
  double tail_fraction = 0;       // estimated remaining integral fraction
};

// Scattering transport of the asymptotic vacuum projections per mode:
// direct route c^{+,t} = U(0,t) c_vac U(t,0) at the sample times, and the
// exact difference-route integral
//   G(T) = -i int_0^T U_ad(0,t) [H_offdiag(t), pi+] U_ad(t,0) dt
// accumulated inside one adaptive integration per mode.
ModeScattering mode_scattering(const ModeDecomposition& md, const ModeFrameCurves& fc,
                               bool out_direction, const std::vector<double>& sample_times,
                               double rtol, double atol);

}  // namespace kgscat
