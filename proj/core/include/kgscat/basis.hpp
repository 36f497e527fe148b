#pragma once

#include <Eigen/Dense>
#include <complex>

#include "kgscat/errors.hpp"

namespace kgscat {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

// Fourier discretization of the circle of circumference L: modes k = -K..K,
// N = 2K+1 collocation points. Matrix indices are j = k + K.
struct ModeBasis {
  int K = 0;
  double L = 0;
  int N = 0;
  RVec xs;  // equispaced grid on [0, L)

  int index(int mode) const { return mode + K; }
  int mode(int index) const { return index - K; }
  double wavenumber(int mode) const { return 2.0 * pi * mode / L; }
  // <k> with the circle's length scale, used by Sobolev weights
  double bracket(int mode) const {
    double w = wavenumber(mode);
    return std::sqrt(1.0 + w * w);
  }
};

ModeBasis make_basis(int K, double L);

// Exact transforms between grid samples and mode coefficients (unitary up to
// the 1/N convention; exact for band-limited data).
Mat grid_to_mode_matrix(const ModeBasis& b);
Mat mode_to_grid_matrix(const ModeBasis& b);
Vec mode_coefficients(const ModeBasis& b, const Vec& samples);
Vec grid_values(const ModeBasis& b, const Vec& coeffs);

// Multiplication operator by the band-limited interpolant of f (samples at
// b.xs), as the Galerkin (truncated convolution) matrix M_{jk} = fhat(j-k).
Mat mult_op(const ModeBasis& b, const Vec& f_samples);
Mat mult_op(const ModeBasis& b, const RVec& f_samples);

// Spectral d/dx: diagonal with entries i * 2*pi*k/L.
Mat derivative_op(const ModeBasis& b);

// Diagonal Sobolev weight <k>^m.
Mat sobolev_weight(const ModeBasis& b, double m);

// Positive multiplication weight with cached symmetric factorizations, the
// discrete stand-in for the L^2(S^1, w dx) inner product.
struct Weight {
  Mat W;        // mult_op of the density
  Mat Winv;
  Mat Whalf;    // Hermitian square roots of W
  Mat Whalfinv;
  double min_density = 0;
};

Weight make_weight(const ModeBasis& b, const RVec& density_samples);
Weight identity_weight(const ModeBasis& b);

// W^{-1} A^dag W. Involutive and an anti-homomorphism.
Mat weighted_adjoint(const Mat& A, const Mat& W);
Mat weighted_adjoint(const Mat& A, const Weight& W);

// ||A||_2 (largest singular value) and the weighted operator norm
// ||Whalf A Whalfinv||_2.
double op_norm(const Mat& A);

// Trigonometric-interpolation evaluation matrix: coefficients -> values at
// arbitrary points y (used for pullbacks along diffeomorphisms).
Mat evaluation_matrix(const ModeBasis& b, const RVec& points);
// Composition operator u |-> u o y on grid samples, y given at b.xs.
Mat composition_op(const ModeBasis& b, const RVec& y_at_grid);

}  // namespace kgscat
