#pragma once

#include <functional>

#include "kgscat/decay.hpp"
#include "kgscat/timegrid.hpp"

namespace kgscat {

inline constexpr double kPositivityFloor = 1e-10;
inline constexpr double kSelfAdjointTol = 1e-8;

// Eigendecomposition of an operator self-adjoint in the W-weighted inner
// product: a = P diag(evals) P^{-1} with P = Whalfinv * (unitary).
struct WeightedEig {
  Eigen::VectorXd evals;
  Mat P;     // columns: eigenvectors, W-orthonormal
  Mat Pinv;  // = (flat unitary)^dag * Whalf
};

WeightedEig weighted_eig(const Mat& a, const Weight& W, double sa_tol = kSelfAdjointTol);

Mat apply_spectral(const WeightedEig& e, const std::function<double(double)>& f);

// Principal square root of a W-self-adjoint positive operator, via the
// eigendecomposition route. Result is W-self-adjoint and positive.
Mat sqrt_op(const Mat& a, const Weight& W, double floor = kPositivityFloor);

// a^alpha for alpha in (0,1) by the absolutely convergent resolvent integral
//   a^alpha = (sin(pi alpha)/pi) int_0^inf s^{alpha-1} (a+s)^{-1} a ds,
// substitution s = m^2 u/(1-u) and Gauss-Jacobi quadrature absorbing the
// endpoint weights u^{alpha-1} (1-u)^{-alpha}. Cross-check oracle for the
// eigendecomposition route.
Mat frac_power_quadrature(const Mat& a, const Weight& W, double alpha, int n_quad);

// Gauss-Jacobi rule for weight (1-x)^A (1+x)^B on [-1,1].
void gauss_jacobi(int n, double A, double B, std::vector<double>& nodes,
                  std::vector<double>& weights);

// Numerical smoothing diagnostics: Sobolev-amplified norms s_m = ||D^m A D^m||
// with D = sobolev_weight(1), plus the entry-decay exponent.
struct SmoothingReport {
  std::vector<double> s_m;  // m = 0..m_max
  DecayFit entry_fit;
  bool numerically_smoothing = false;
};

SmoothingReport smoothing_order(const Mat& A, const ModeBasis& b, int m_max = 4,
                                int n_lo = -1, int n_hi = -1, double p_threshold = 6.0,
                                double r2_threshold = 0.9);

// Time decay of ||a1(t)^alpha - a2^alpha|| over the (trimmed) grid.
DecayFit power_difference_decay(const OpFamily& a1, const Mat& a2_const, double alpha,
                                const std::vector<Weight>& W, int fit_begin = -1,
                                int fit_end = -1);

}  // namespace kgscat
