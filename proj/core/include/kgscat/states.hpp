#pragma once

#include "kgscat/modes.hpp"

namespace kgscat {

// Covariance pair of a quasi-free state at a fixed anchor time, with the
// induced pairings lambda^{+-} = +-q c^{+-}. Scattering-limit states carry in
// addition the precisely integrated difference to the reference covariances
// (the route that preserves the smoothing structure numerically).
struct Covariances {
  enum class Tag { vac, ref, in_state, out_state };
  Tag tag = Tag::vac;
  double t_anchor = 0;
  Mat c_plus, c_minus;
  Mat lambda_plus, lambda_minus;
  std::optional<Mat> ref_diff_plus, ref_diff_minus;
};

const char* tag_name(Covariances::Tag t);

struct ConvergenceTrace {
  std::vector<double> times;
  std::vector<double> increments;
  DecayFit fit;
  double tail_fraction = 0;
  double boundary_term_norm = 0;   // dropped o(1) boundary term of the difference route
  double route_discrepancy = 0;    // direct limit vs reference + integral route
};

struct StateReport {
  double complementarity = 0;
  double idempotency_plus = 0, idempotency_minus = 0;
  double min_eig_lambda_plus = 0, min_eig_lambda_minus = 0;
  bool pass = false;
};

// c_vac = 1/2 [[1, +-a^{-1/2}], [+-a^{1/2}, 1]]
Covariances vacuum_covariances(const Mat& a_asym, const ModeBasis& basis, const Weight& W);

// c_ref(t0) = T(t0) pi^{+-} T^{-1}(t0)
Covariances reference_covariances(const DiagFrame& frame, const ModelCoefficients& model,
                                  double t0);
// the equivalent explicit block formula (cross-check route)
Mat reference_plus_block_formula(const DiagFrame& frame, int node);

Covariances transport_covariances(const Mat& U_to_anchor, const Mat& U_anchor_to,
                                  const Covariances& c, double to_t);

StateReport validate_state(const Covariances& c, const ModeBasis& basis, const Weight& W,
                           double tol_complementarity = 1e-8, double tol_idem = 1e-8,
                           double tol_pos = 1e-8);

// Z(t) = (composition with the inverse flow map) R T(t); R = identity in one
// space dimension. Assembled per node on demand.
struct ZFamily {
  TimeGrid grid;
  ModeBasis basis;
  bool trivial_flow = true;
  std::vector<Mat> comp_inv;  // composition with y^{-1}(t, .), mode basis
  Mat comp_inv_out, comp_inv_in;
  const DiagFrame* frame = nullptr;
  Mat T_out, T_in;

  Mat Z_at(int node) const;
  Mat Z_inv_at(int node) const;
  Mat Z_out() const;
  Mat Z_in() const;
};

ZFamily build_Z(const ModelCoefficients& model, const DiagFrame& frame, const ShiftFlow& flow);

// || Z^{-1}(t) Z_asym - 1 || over nodes with t in the fit window
DecayFit z_convergence(const ZFamily& z, bool out_direction, double fit_t_lo, double fit_t_hi);

struct ScatteringOptions {
  bool out_direction = true;
  std::vector<double> sample_times;
  double rtol = 1e-8;
  double atol = 1e-12;
  int mode_n_max = 5;
  double gap_floor = 0.05;
  bool allow_mode_path = true;
};

struct ScatteringResult {
  Covariances cov;
  ConvergenceTrace trace;
  bool used_mode_path = false;
};

// Transport of the asymptotic vacuum projections to the anchor time 0 with
// increment trace, tail extrapolation, and (mode path) the difference-route
// integral stored in cov.ref_diff_*.
ScatteringResult scattering_covariances(const ModelCoefficients& model, const DiagFrame& frame,
                                        const ScatteringOptions& opts);

// geometric sample times snapped to grid nodes, |t| strictly increasing
std::vector<double> geometric_samples(const TimeGrid& grid, double t_lo, double t_hi, int count,
                                      bool negative = false);

// two-point kernels Lambda^{+-}(t,s) and the commutator kernel G(t,s);
// U_t_0 = U(t,0), U_0_s = U(0,s) for the state's anchor 0.
std::pair<Mat, Mat> two_point(const Mat& U_t_0, const Mat& U_0_s, const Covariances& c);
Mat causal_propagator(const Mat& U_t_s);

struct HadamardReport {
  std::array<SmoothingReport, 4> blocks;
  double worst_exponent = 0;
  double worst_r2 = 1;
  bool all_sentinel = true;
  bool pass = false;
  bool used_precise_difference = false;
};

HadamardReport hadamard_difference(const Covariances& state, const Covariances& ref,
                                   const ModeBasis& basis, int n_lo = -1, int n_hi = -1,
                                   double p_threshold = 6.0, double r2_threshold = 0.9);

}  // namespace kgscat
