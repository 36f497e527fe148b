#include <doctest.h>

#include <random>

#include "kgscat/powers.hpp"

using namespace kgscat;

namespace {

Mat random_spd(int n, std::mt19937_64& rng, double cond = 100.0) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mat A(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) A(r, c) = cplx(unif(rng), unif(rng));
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(A + A.adjoint()));
  Eigen::VectorXd ev(n);
  for (int i = 0; i < n; ++i) ev[i] = 1.0 + (cond - 1.0) * i / std::max(1, n - 1);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST_SUITE_BEGIN("powers");

TEST_CASE("sqrt_op: diagonal case, random SPD, positivity floor") {
  ModeBasis b = make_basis(8, 2.0 * pi);
  Weight I = identity_weight(b);
  Mat a = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) {
    double k = b.mode(j);
    a(j, j) = k * k + 1.0;
  }
  Mat s = sqrt_op(a, I);
  for (int j = 0; j < b.N; ++j) {
    double k = b.mode(j);
    CHECK(std::abs(s(j, j) - std::sqrt(k * k + 1.0)) <= 1e-12);
  }

  std::mt19937_64 rng(17);
  ModeBasis b6 = make_basis(3, 2.0 * pi);  // N = 7; use a 6x6-scale small case
  Mat spd = random_spd(b6.N, rng);
  Mat e = sqrt_op(spd, identity_weight(b6));
  CHECK(op_norm(e * e - spd) <= 1e-12 * op_norm(spd));

  Mat tiny = spd;
  Eigen::SelfAdjointEigenSolver<Mat> es(tiny);
  Mat shifted = tiny - (es.eigenvalues().minCoeff() - 1e-14) * Mat::Identity(b6.N, b6.N);
  CHECK_THROWS_AS(sqrt_op(shifted, identity_weight(b6)), Error);

  // non-self-adjoint input detected
  Mat bad = spd;
  bad(0, 1) += 1.0;
  CHECK_THROWS_AS(sqrt_op(bad, identity_weight(b6)), Error);
}

TEST_CASE("sqrt_op in a genuine weight: self-adjointness preserved") {
  ModeBasis b = make_basis(8, 2.0 * pi);
  RVec dens(b.N);
  for (int m = 0; m < b.N; ++m) dens[m] = 1.0 + 0.3 * std::cos(b.xs[m]);
  Weight W = make_weight(b, dens);
  Mat D = derivative_op(b);
  // the Laplacian factor is the inverse of the weight density
  Mat G = mult_op(b, RVec(dens.array().inverse()));
  Mat a = -G * D * G * D + Mat::Identity(b.N, b.N);
  Mat e = sqrt_op(a, W);
  CHECK(op_norm(e * e - a) <= 1e-10 * op_norm(a));
  CHECK(op_norm(weighted_adjoint(e, W) - e) <= 1e-9 * op_norm(e));
}

TEST_CASE("frac_power_quadrature: scalar, sqrt cross-check, quarter power") {
  ModeBasis b = make_basis(3, 2.0 * pi);
  Weight I = identity_weight(b);
  Mat four = 4.0 * Mat::Identity(b.N, b.N);
  Mat r = frac_power_quadrature(four, I, 0.5, 64);
  CHECK(op_norm(r - 2.0 * Mat::Identity(b.N, b.N)) <= 1e-8);

  ModeBasis bb = make_basis(8, 2.0 * pi);
  Mat a = Mat::Zero(bb.N, bb.N);
  for (int j = 0; j < bb.N; ++j) {
    double k = bb.mode(j);
    a(j, j) = k * k + 1.0;
  }
  Weight Ib = identity_weight(bb);
  Mat s1 = sqrt_op(a, Ib);
  Mat s2 = frac_power_quadrature(a, Ib, 0.5, 128);
  CHECK(op_norm(s1 - s2) <= 1e-7);

  std::mt19937_64 rng(23);
  Mat spd = random_spd(b.N, rng, 50.0);
  Mat q = frac_power_quadrature(spd, I, 0.25, 128);
  CHECK(op_norm(q * q * q * q - spd) <= 1e-6 * op_norm(spd));
}

TEST_CASE("two power routes agree over wide spectra") {
  // spectra in [1, 1e4]: mode cutoff 100^2 with unit mass
  ModeBasis b = make_basis(16, 2.0 * pi);
  Mat a = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) {
    double k = b.mode(j) * 6.2;
    a(j, j) = k * k + 1.0;
  }
  Weight I = identity_weight(b);
  Mat s1 = sqrt_op(a, I);
  Mat s2 = frac_power_quadrature(a, I, 0.5, 128);
  CHECK(op_norm(s1 - s2) <= 1e-6);
}

TEST_CASE("monotonicity spot check on commuting pairs") {
  ModeBasis b = make_basis(6, 2.0 * pi);
  Weight I = identity_weight(b);
  Mat a1 = Mat::Zero(b.N, b.N), a2 = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) {
    double k = b.mode(j);
    a2(j, j) = k * k + 1.0;
    a1(j, j) = k * k + 2.0;  // a1 >= a2
  }
  Mat d = sqrt_op(a1, I) - sqrt_op(a2, I);
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (d + d.adjoint())));
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("smoothing_order: zero, decaying diagonal, identity") {
  ModeBasis b = make_basis(32, 2.0 * pi);
  SmoothingReport z = smoothing_order(Mat(Mat::Zero(b.N, b.N)), b);
  CHECK(z.entry_fit.sentinel_inf);
  for (double s : z.s_m) CHECK(s == 0.0);
  CHECK(z.numerically_smoothing);

  Mat A = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) A(j, j) = std::pow(b.bracket(b.mode(j)), -8.0);
  SmoothingReport r = smoothing_order(A, b, 4);
  for (int m = 0; m <= 4; ++m) CHECK(r.s_m[m] <= 1.0 + 1e-12);
  CHECK(r.entry_fit.exponent == doctest::Approx(8.0).epsilon(0.05));
  CHECK(r.numerically_smoothing);

  SmoothingReport i = smoothing_order(Mat(Mat::Identity(b.N, b.N)), b, 2);
  CHECK(std::abs(i.entry_fit.exponent) <= 0.05);
  CHECK(!i.numerically_smoothing);
  double K2 = std::pow(b.bracket(b.K), 2.0);
  CHECK(i.s_m[1] == doctest::Approx(K2).epsilon(1e-10));
  CHECK(i.s_m[2] == doctest::Approx(K2 * K2).epsilon(1e-10));
}

TEST_CASE("power_difference_decay: identical family, scalar Taylor oracle") {
  ModeBasis b = make_basis(4, 2.0 * pi);
  TimeGrid g = make_grid(1.0, 40.0, 64);
  Mat a2 = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) {
    double k = b.mode(j);
    a2(j, j) = k * k + 1.0;
  }
  std::vector<Weight> W(g.n_nodes, identity_weight(b));

  OpFamily same = constant_family(g, a2);
  DecayFit f0 = power_difference_decay(same, a2, 0.5, W);
  CHECK(f0.exact);

  OpFamily fam;
  fam.grid = g;
  fam.mats.resize(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) {
    double t = g.node(i);
    fam.mats[i] = (1.0 + std::pow(1.0 + t * t, -1.0)) * a2;
  }
  // sqrt(1 + <t>^-2) - 1 ~ <t>^-2 / 2, so the planted exponent is 2
  DecayFit f = power_difference_decay(fam, a2, 0.5, W, 8, g.n_nodes - 8);
  CHECK(f.exponent == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("gauss-jacobi quadrature integrates its own weight") {
  // sum of weights = mu0 = pi / sin(pi alpha) for the A+B = -1 pair
  for (double alpha : {0.25, 0.5, 0.75}) {
    std::vector<double> xs, ws;
    gauss_jacobi(24, -alpha, alpha - 1.0, xs, ws);
    double sum = 0;
    for (double w : ws) sum += w;
    CHECK(sum == doctest::Approx(pi / std::sin(pi * alpha)).epsilon(1e-12));
    // and the first moment of a smooth function: int_0^1 w(u) u du
    // = mu0 * alpha (checked against the Beta-function identity)
    double m1 = 0;
    for (size_t i = 0; i < xs.size(); ++i) m1 += ws[i] * 0.5 * (xs[i] + 1.0);
    CHECK(m1 == doctest::Approx(pi / std::sin(pi * alpha) * alpha).epsilon(1e-10));
  }
}

TEST_SUITE_END();
