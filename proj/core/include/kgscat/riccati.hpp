#pragma once

#include "kgscat/geometry.hpp"
#include "kgscat/powers.hpp"

namespace kgscat {

// Approximate solution of i b' - b^2 + a + i r b = 0 by the fixed-point
// iteration c_n = a_0 + F(c_{n-1}), b = eps + c_n, together with the
// conjugate branch b_minus = -(b)^* in the time-dependent weighted sense.
struct RiccatiSolution {
  TimeGrid grid;
  ModeBasis basis;
  OpFamily eps;        // a(t)^{1/2}
  OpFamily eps_inv;
  OpFamily b;          // b_plus
  OpFamily b_minus;
  OpFamily res_plus;   // i b' - b^2 + a + i r b, nodewise
  OpFamily res_minus;
  int n_iter = 0;
  double gap_floor = 0;
  bool clamp_activated = false;
  SmoothingReport clamp_report;

  // per iteration: sup-node increment norm and entry-decay fit at the probe
  // node nearest t = 0
  std::vector<double> increment_norms;
  std::vector<DecayFit> increment_fits;
};

// a_0 = (i/2)(eps^{-1} eps' + eps^{-1} r eps); endpoints use the one-sided
// differentiation stencils.
OpFamily initial_term(const ModelCoefficients& model);

struct RiccatiOptions {
  int n_max = 4;
  double tol = 0.0;          // 0: always run n_max iterations
  double gap_floor = 0.1;    // relative to the spectral floor of 2 eps
  int fit_shell_lo = -1;     // entry-fit window (defaults K/8 .. K/2)
  int fit_shell_hi = -1;
};

RiccatiSolution riccati_iterate(const ModelCoefficients& model, const RiccatiOptions& opts = {});

// Spectral clamp of the gap b_plus - b_minus at floor * min-eig(2 eps),
// redistributed symmetrically to both branches. No-op when the gap is safe.
void enforce_gap(RiccatiSolution& sol, const ModelCoefficients& model, double floor);

// Nodewise residuals of both branches plus their decay diagnostics.
struct ResidualReport {
  DecayFit time_decay;        // fit of ||res(t)|| over [fit_lo, fit_hi]
  SmoothingReport smoothing;  // at the probe node nearest t = 0
};
ResidualReport riccati_residual(RiccatiSolution& sol, const ModelCoefficients& model,
                                double fit_t_lo = 5.0, double fit_t_hi = 40.0);

}  // namespace kgscat
