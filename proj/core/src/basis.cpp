#include "kgscat/basis.hpp"

namespace kgscat {

ModeBasis make_basis(int K, double L) {
  require(K >= 1, errc::invalid_config, "mode cutoff K must be >= 1");
  require(L > 0, errc::invalid_config, "circumference L must be positive");
  ModeBasis b;
  b.K = K;
  b.L = L;
  b.N = 2 * K + 1;
  b.xs.resize(b.N);
  for (int m = 0; m < b.N; ++m) b.xs[m] = L * m / b.N;
  return b;
}

Mat grid_to_mode_matrix(const ModeBasis& b) {
  Mat F(b.N, b.N);
  for (int j = 0; j < b.N; ++j) {
    double k = b.mode(j);
    for (int m = 0; m < b.N; ++m)
      F(j, m) = std::exp(cplx(0, -2.0 * pi * k * m / b.N)) / double(b.N);
  }
  return F;
}

Mat mode_to_grid_matrix(const ModeBasis& b) {
  Mat E(b.N, b.N);
  for (int m = 0; m < b.N; ++m)
    for (int j = 0; j < b.N; ++j)
      E(m, j) = std::exp(cplx(0, 2.0 * pi * double(b.mode(j)) * m / b.N));
  return E;
}

Vec mode_coefficients(const ModeBasis& b, const Vec& samples) {
  require(samples.size() == b.N, errc::invalid_data, "sample length != basis dimension");
  Vec out(b.N);
  for (int j = 0; j < b.N; ++j) {
    double k = b.mode(j);
    cplx s = 0;
    for (int m = 0; m < b.N; ++m)
      s += samples[m] * std::exp(cplx(0, -2.0 * pi * k * m / b.N));
    out[j] = s / double(b.N);
  }
  return out;
}

Vec grid_values(const ModeBasis& b, const Vec& coeffs) {
  require(coeffs.size() == b.N, errc::invalid_data, "coefficient length != basis dimension");
  Vec out(b.N);
  for (int m = 0; m < b.N; ++m) {
    cplx s = 0;
    for (int j = 0; j < b.N; ++j)
      s += coeffs[j] * std::exp(cplx(0, 2.0 * pi * double(b.mode(j)) * m / b.N));
    out[m] = s;
  }
  return out;
}

Mat mult_op(const ModeBasis& b, const Vec& f_samples) {
  Vec fhat = mode_coefficients(b, f_samples);
  Mat M = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j)
    for (int k = 0; k < b.N; ++k) {
      int d = b.mode(j) - b.mode(k);
      if (std::abs(d) <= b.K) M(j, k) = fhat[b.index(d)];
    }
  return M;
}

Mat mult_op(const ModeBasis& b, const RVec& f_samples) {
  require(f_samples.size() == b.N, errc::invalid_data, "sample length != basis dimension");
  return mult_op(b, Vec(f_samples.cast<cplx>()));
}

Mat derivative_op(const ModeBasis& b) {
  Mat D = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) D(j, j) = cplx(0, b.wavenumber(b.mode(j)));
  return D;
}

Mat sobolev_weight(const ModeBasis& b, double m) {
  Mat S = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) S(j, j) = std::pow(b.bracket(b.mode(j)), m);
  return S;
}

Weight make_weight(const ModeBasis& b, const RVec& density_samples) {
  require(density_samples.size() == b.N, errc::invalid_data,
          "weight samples length != basis dimension");
  double lo = density_samples.minCoeff();
  require(lo > 0, errc::ill_conditioned_weight, "weight density must be strictly positive");
  Weight w;
  w.min_density = lo;
  w.W = mult_op(b, density_samples);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w.W + Mat(w.W.adjoint())));
  double emin = es.eigenvalues().minCoeff();
  double emax = es.eigenvalues().maxCoeff();
  require(emin > 0 && emax / emin < 1e14, errc::ill_conditioned_weight,
          "weight operator not positive definite or numerically singular");
  Mat V = es.eigenvectors();
  w.Winv = V * es.eigenvalues().cwiseInverse().asDiagonal() * V.adjoint();
  w.Whalf = V * es.eigenvalues().cwiseSqrt().asDiagonal() * V.adjoint();
  w.Whalfinv = V * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * V.adjoint();
  return w;
}

Weight identity_weight(const ModeBasis& b) {
  Weight w;
  w.W = Mat::Identity(b.N, b.N);
  w.Winv = w.W;
  w.Whalf = w.W;
  w.Whalfinv = w.W;
  w.min_density = 1.0;
  return w;
}

Mat weighted_adjoint(const Mat& A, const Mat& W) {
  Eigen::PartialPivLU<Mat> lu(W);
  return lu.solve(A.adjoint() * W);
}

Mat weighted_adjoint(const Mat& A, const Weight& W) { return W.Winv * (A.adjoint() * W.W); }

double op_norm(const Mat& A) {
  if (A.rows() == 0) return 0;
  return A.jacobiSvd().singularValues()(0);
}

Mat evaluation_matrix(const ModeBasis& b, const RVec& points) {
  Mat E(points.size(), b.N);
  for (int m = 0; m < points.size(); ++m)
    for (int j = 0; j < b.N; ++j)
      E(m, j) = std::exp(cplx(0, b.wavenumber(b.mode(j)) * points[m]));
  return E;
}

Mat composition_op(const ModeBasis& b, const RVec& y_at_grid) {
  require(y_at_grid.size() == b.N, errc::invalid_data, "composition map length mismatch");
  // mode -> values at y(x_m) -> back to modes
  return grid_to_mode_matrix(b) * evaluation_matrix(b, y_at_grid);
}

}  // namespace kgscat
