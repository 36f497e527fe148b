#include "kgscat/powers.hpp"

#include <cmath>

namespace kgscat {

WeightedEig weighted_eig(const Mat& a, const Weight& W, double sa_tol) {
  Mat flat = W.Whalf * a * W.Whalfinv;
  Mat herm = 0.5 * (flat + Mat(flat.adjoint()));
  double scale = std::max(1.0, herm.norm());
  double defect = (flat - herm).norm() / scale;
  require(defect <= sa_tol, errc::not_self_adjoint,
          "operator not self-adjoint in the weighted inner product (defect " +
              std::to_string(defect) + ")");
  Eigen::SelfAdjointEigenSolver<Mat> es(herm);
  WeightedEig e;
  e.evals = es.eigenvalues();
  e.P = W.Whalfinv * es.eigenvectors();
  e.Pinv = es.eigenvectors().adjoint() * W.Whalf;
  return e;
}

Mat apply_spectral(const WeightedEig& e, const std::function<double(double)>& f) {
  Eigen::VectorXd fe(e.evals.size());
  for (int i = 0; i < fe.size(); ++i) fe[i] = f(e.evals[i]);
  return e.P * fe.asDiagonal() * e.Pinv;
}

Mat sqrt_op(const Mat& a, const Weight& W, double floor) {
  WeightedEig e = weighted_eig(a, W);
  require(e.evals.minCoeff() >= floor, errc::not_positive,
          "spectrum reaches below the positivity floor (min eigenvalue " +
              std::to_string(e.evals.minCoeff()) + ")");
  return apply_spectral(e, [](double x) { return std::sqrt(x); });
}

void gauss_jacobi(int n, double A, double B, std::vector<double>& nodes,
                  std::vector<double>& weights) {
  require(n >= 1 && A > -1 && B > -1, errc::invalid_config, "invalid Gauss-Jacobi rule");
  // Golub-Welsch on the symmetric Jacobi matrix of the three-term recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double ak;
    if (k == 0)
      ak = (B - A) / (A + B + 2.0);
    else
      ak = (B * B - A * A) / ((2.0 * k + A + B) * (2.0 * k + A + B + 2.0));
    J(k, k) = ak;
    if (k + 1 < n) {
      double m = k + 1;
      double b2;
      if (k == 0)
        // m = 1 with the common factor (1+A+B) cancelled; the raw ratio is
        // 0/0 when A+B = -1, which is exactly the case used by the
        // fractional-power substitution.
        b2 = 4.0 * (1.0 + A) * (1.0 + B) / (std::pow(2.0 + A + B, 2) * (3.0 + A + B));
      else
        b2 = 4.0 * m * (m + A) * (m + B) * (m + A + B) /
             (std::pow(2.0 * m + A + B, 2) * (2.0 * m + A + B + 1.0) * (2.0 * m + A + B - 1.0));
      double bk = std::sqrt(b2);
      J(k, k + 1) = bk;
      J(k + 1, k) = bk;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  double mu0 = std::pow(2.0, A + B + 1.0) *
               std::exp(std::lgamma(A + 1.0) + std::lgamma(B + 1.0) - std::lgamma(A + B + 2.0));
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

Mat frac_power_quadrature(const Mat& a, const Weight& W, double alpha, int n_quad) {
  require(alpha > 0 && alpha < 1, errc::invalid_config, "alpha must lie in (0,1)");
  require(n_quad >= 4, errc::invalid_config, "n_quad too small");
  WeightedEig probe = weighted_eig(a, W);
  double lo = probe.evals.minCoeff();
  double hi = probe.evals.maxCoeff();
  require(lo >= kPositivityFloor, errc::not_positive,
          "spectrum not bounded below by a positive floor");

  //   a^alpha = sin(pi a)/pi * c^alpha * int_0^1 u^{a-1}(1-u)^{-a} F(u) du,
  //   F(u) = ((1-u) a + c u)^{-1} a,  s = c u/(1-u),
  // with the endpoint weights absorbed into a Gauss-Jacobi rule. The scale c
  // is the geometric mean of the spectral bounds: the integrand is then
  // analytic past both endpoints at distance ~ sqrt(lo/hi), and the rule
  // converges spectrally across the whole spectrum. Anchoring c at the
  // spectral floor instead leaves a boundary layer of width lo/hi at u = 1
  // and loses the tolerance on wide spectra.
  double scale = std::sqrt(lo * hi);
  std::vector<double> xs, ws;
  gauss_jacobi(n_quad, -alpha, alpha - 1.0, xs, ws);

  int N = int(a.rows());
  Mat acc = Mat::Zero(N, N);
  for (int i = 0; i < n_quad; ++i) {
    double u = 0.5 * (xs[i] + 1.0);
    Mat R = (1.0 - u) * a + scale * u * Mat::Identity(N, N);
    Eigen::PartialPivLU<Mat> lu(R);
    require(lu.rcond() > 1e-14, errc::singular_resolvent, "resolvent solve ill-conditioned");
    acc += ws[i] * lu.solve(a);
  }
  // Mapping [-1,1] -> [0,1] turns u^{alpha-1}(1-u)^{-alpha} du into exactly
  // the Jacobi weight with A+B = -1; the powers of 2 cancel, so the rule sum
  // needs no extra Jacobian factor.
  double c = std::sin(pi * alpha) / pi * std::pow(scale, alpha);
  return c * acc;
}

SmoothingReport smoothing_order(const Mat& A, const ModeBasis& b, int m_max, int n_lo, int n_hi,
                                double p_threshold, double r2_threshold) {
  if (n_lo < 0) n_lo = std::max(1, b.K / 8);
  if (n_hi < 0) n_hi = b.K / 2;
  SmoothingReport rep;
  Mat D = sobolev_weight(b, 1.0);
  Mat cur = A;
  rep.s_m.resize(m_max + 1);
  for (int m = 0; m <= m_max; ++m) {
    rep.s_m[m] = op_norm(cur);
    if (m < m_max) cur = D * cur * D;
  }
  rep.entry_fit = entry_decay_fit(A, b, n_lo, n_hi);
  rep.numerically_smoothing =
      rep.entry_fit.sentinel_inf ||
      (rep.entry_fit.exponent >= p_threshold && rep.entry_fit.r_squared >= r2_threshold);
  return rep;
}

DecayFit power_difference_decay(const OpFamily& a1, const Mat& a2_const, double alpha,
                                const std::vector<Weight>& W, int fit_begin, int fit_end) {
  int n = a1.size();
  require(int(W.size()) == n, errc::invalid_data, "one weight per node required");
  std::vector<std::pair<double, double>> vals(n);
  for (int i = 0; i < n; ++i) {
    WeightedEig e1 = weighted_eig(a1.at(i), W[i]);
    require(e1.evals.minCoeff() > 0, errc::not_positive, "a1 not positive");
    Mat p1 = apply_spectral(e1, [&](double x) { return std::pow(x, alpha); });
    WeightedEig e2 = weighted_eig(a2_const, W[i]);
    require(e2.evals.minCoeff() > 0, errc::not_positive, "a2 not positive");
    Mat p2 = apply_spectral(e2, [&](double x) { return std::pow(x, alpha); });
    vals[i] = {a1.grid.node(i), op_norm(p1 - p2)};
  }
  if (fit_begin < 0) fit_begin = kGridTrim;
  if (fit_end < 0) fit_end = n - kGridTrim;
  double vmax = 0;
  for (int i = fit_begin; i < fit_end; ++i) vmax = std::max(vmax, vals[i].second);
  if (vmax <= kExactFloor) {
    DecayFit f;
    f.exact = true;
    f.sentinel_inf = true;
    f.exponent = std::numeric_limits<double>::infinity();
    f.r_squared = 1.0;
    f.window_begin = fit_begin;
    f.window_end = fit_end;
    return f;
  }
  return fit_time_decay(vals, fit_begin, fit_end);
}

}  // namespace kgscat
