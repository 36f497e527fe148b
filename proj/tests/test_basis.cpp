#include <doctest.h>

#include <random>

#include "kgscat/decay.hpp"
#include "kgscat/timegrid.hpp"

using namespace kgscat;

namespace {

Vec random_band_limited(const ModeBasis& b, int kmax, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vec chat = Vec::Zero(b.N);
  for (int j = 0; j < b.N; ++j)
    if (std::abs(b.mode(j)) <= kmax) chat[j] = cplx(unif(rng), unif(rng));
  return grid_values(b, chat);
}

}  // namespace

TEST_SUITE_BEGIN("basis");

TEST_CASE("make_basis definitions and preconditions") {
  ModeBasis b = make_basis(1, 2.0 * pi);
  CHECK(b.N == 3);
  CHECK(b.xs[0] == doctest::Approx(0.0));
  CHECK(b.xs[1] == doctest::Approx(2.0 * pi / 3.0));
  CHECK(b.xs[2] == doctest::Approx(4.0 * pi / 3.0));

  CHECK(make_basis(32, 2.0 * pi).N == 65);

  CHECK_THROWS_AS(make_basis(0, 1.0), Error);
  CHECK_THROWS_AS(make_basis(4, -1.0), Error);
}

TEST_CASE("transform round trip is exact for all tested sizes") {
  std::mt19937_64 rng(11);
  for (int K : {1, 4, 16, 64, 256}) {
    ModeBasis b = make_basis(K, 2.0 * pi);
    Vec u = random_band_limited(b, K, rng);
    Vec v = grid_values(b, mode_coefficients(b, u));
    CHECK((v - u).cwiseAbs().maxCoeff() <= 1e-12 * u.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("mult_op: identity, cosine band, pointwise-product oracle") {
  ModeBasis b2 = make_basis(2, 2.0 * pi);
  Mat Mone = mult_op(b2, RVec(RVec::Ones(b2.N)));
  CHECK((Mone - Mat::Identity(b2.N, b2.N)).cwiseAbs().maxCoeff() <= 1e-14);

  RVec cosx(b2.N);
  for (int m = 0; m < b2.N; ++m) cosx[m] = std::cos(b2.xs[m]);
  Mat Mc = mult_op(b2, cosx);
  for (int j = 0; j < b2.N; ++j)
    for (int k = 0; k < b2.N; ++k) {
      double expect = std::abs(b2.mode(j) - b2.mode(k)) == 1 ? 0.5 : 0.0;
      CHECK(std::abs(Mc(j, k) - expect) <= 1e-14);
    }

  // half-band f and u, so the product is exactly representable
  std::mt19937_64 rng(3);
  ModeBasis b = make_basis(16, 2.0 * pi);
  Vec f = random_band_limited(b, 8, rng);
  Vec u = random_band_limited(b, 8, rng);
  Vec lhs = grid_values(b, Vec(mult_op(b, f) * mode_coefficients(b, u)));
  Vec rhs = f.cwiseProduct(u);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());

  CHECK_THROWS_AS(mult_op(b, Vec(Vec::Ones(3))), Error);
}

TEST_CASE("derivative_op: diagonal values and analytic derivative oracle") {
  ModeBasis b = make_basis(8, 2.0 * pi);
  Mat D = derivative_op(b);
  CHECK(std::abs(D(b.index(0), b.index(0))) == 0.0);
  CHECK(D(b.index(3), b.index(3)) == cplx(0, 3));

  Vec sinx(b.N), cosx(b.N);
  for (int m = 0; m < b.N; ++m) {
    sinx[m] = std::sin(b.xs[m]);
    cosx[m] = std::cos(b.xs[m]);
  }
  Vec got = grid_values(b, Vec(D * mode_coefficients(b, sinx)));
  CHECK((got - cosx).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sobolev_weight: identity, values, inverse pair") {
  ModeBasis b = make_basis(8, 2.0 * pi);
  CHECK((sobolev_weight(b, 0.0) - Mat::Identity(b.N, b.N)).cwiseAbs().maxCoeff() == 0.0);
  Mat S1 = sobolev_weight(b, 1.0);
  CHECK(std::abs(S1(b.index(0), b.index(0)) - 1.0) <= 1e-15);
  CHECK(std::abs(S1(b.index(1), b.index(1)) - std::sqrt(2.0)) <= 1e-15);
  Mat prod = S1 * sobolev_weight(b, -1.0);
  CHECK((prod - Mat::Identity(b.N, b.N)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("weighted_adjoint: flat case, fixed point, anti-homomorphism, involution") {
  ModeBasis b = make_basis(6, 2.0 * pi);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto random_mat = [&]() {
    Mat A(b.N, b.N);
    for (int r = 0; r < b.N; ++r)
      for (int c = 0; c < b.N; ++c) A(r, c) = cplx(unif(rng), unif(rng));
    return A;
  };

  Mat A = random_mat();
  Mat I = Mat::Identity(b.N, b.N);
  CHECK((weighted_adjoint(A, I) - A.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);

  RVec dens(b.N);
  for (int m = 0; m < b.N; ++m) dens[m] = 1.5 + 0.4 * std::cos(b.xs[m]);
  Weight W = make_weight(b, dens);

  // constructed weighted-self-adjoint operator is a fixed point
  Mat H = random_mat();
  H = 0.5 * (H + Mat(H.adjoint()));
  Mat SA = W.Whalfinv * H * W.Whalf;
  CHECK((weighted_adjoint(SA, W) - SA).cwiseAbs().maxCoeff() <= 1e-12);

  Mat B = random_mat();
  Mat lhs = weighted_adjoint(Mat(A * B), W);
  Mat rhs = weighted_adjoint(B, W) * weighted_adjoint(A, W);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * lhs.cwiseAbs().maxCoeff());

  CHECK((weighted_adjoint(weighted_adjoint(A, W), W) - A).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fit_time_decay: planted power laws") {
  auto sample = [](auto g, double lo, double hi, int n) {
    std::vector<std::pair<double, double>> v;
    for (int i = 0; i < n; ++i) {
      double t = lo + (hi - lo) * i / (n - 1);
      v.push_back({t, g(t)});
    }
    return v;
  };

  auto f1 = fit_time_decay(sample([](double t) { return std::pow(1 + t * t, -1.0); }, 5, 50, 24));
  CHECK(f1.exponent == doctest::Approx(2.0).epsilon(0.01));

  auto f2 = fit_time_decay(sample(
      [](double t) { return 3.0 * std::pow(1 + t * t, -0.75) * (1.0 + 0.01 * std::sin(t)); }, 5,
      50, 24));
  CHECK(f2.exponent >= 1.4);
  CHECK(f2.exponent <= 1.6);

  auto f3 = fit_time_decay(sample([](double) { return 2.0; }, 5, 50, 24));
  CHECK(std::abs(f3.exponent) <= 0.02);

  CHECK_THROWS_AS(fit_time_decay({{1, 1.0}, {2, -1.0}, {3, 1.0}, {4, 1.0}}), Error);
  CHECK_THROWS_AS(fit_time_decay({{1, 1.0}, {2, 1.0}, {3, 1.0}}), Error);

  // planted exponents within +-0.05 over at least a decade
  for (double gamma : {0.5, 1.0, 2.0, 3.0}) {
    auto f = fit_time_decay(
        sample([&](double t) { return std::pow(1 + t * t, -gamma / 2); }, 4, 60, 32));
    CHECK(std::abs(f.exponent - gamma) <= 0.05);
    CHECK(f.r_squared >= 0.999);
  }
}

TEST_CASE("entry_decay_fit: diagonal decay, exponential sentinel, identity") {
  ModeBasis b = make_basis(32, 2.0 * pi);
  Mat A = Mat::Zero(b.N, b.N);
  for (int j = 0; j < b.N; ++j) A(j, j) = std::pow(b.bracket(b.mode(j)), -4.0);
  DecayFit f = entry_decay_fit(A, b, 4, 16);
  CHECK(f.exponent == doctest::Approx(4.0).epsilon(0.05));

  Mat E(b.N, b.N);
  for (int j = 0; j < b.N; ++j)
    for (int k = 0; k < b.N; ++k)
      E(j, k) = std::exp(-(std::abs(double(b.mode(j))) + std::abs(double(b.mode(k)))) / 4.0);
  DecayFit fe = entry_decay_fit(E, b, 4, 16);
  CHECK(fe.sentinel_inf);

  DecayFit fi = entry_decay_fit(Mat(Mat::Identity(b.N, b.N)), b, 4, 16);
  CHECK(std::abs(fi.exponent) <= 0.05);

  DecayFit fz = entry_decay_fit(Mat(Mat::Zero(b.N, b.N)), b, 4, 16);
  CHECK(fz.sentinel_inf);
  CHECK(fz.exact);
}

TEST_CASE("OpFamily finite differences against a planted analytic derivative") {
  // rel. err <= 1e-8 at 201 nodes over [-10, 10], as the stencil order implies
  TimeGrid g = make_grid(-10.0, 10.0, 201);
  ModeBasis b = make_basis(2, 2.0 * pi);
  OpFamily fam;
  fam.grid = g;
  fam.mats.resize(g.n_nodes);
  auto val = [](double t) { return 2.0 + std::sin(0.12 * t); };
  auto dval = [](double t) { return 0.12 * std::cos(0.12 * t); };
  for (int i = 0; i < g.n_nodes; ++i)
    fam.mats[i] = val(g.node(i)) * Mat::Identity(b.N, b.N);
  double worst = 0, scale = 0;
  for (int i = 0; i < g.n_nodes; ++i) scale = std::max(scale, std::abs(dval(g.node(i))));
  for (int i = 0; i < g.n_nodes; ++i) {
    double got = fam.derivative_at(i)(0, 0).real();
    worst = std::max(worst, std::abs(got - dval(g.node(i))));
  }
  CHECK(worst / scale <= 1e-8);
}

TEST_CASE("grid invariants") {
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 5), Error);
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 20), Error);
  TimeGrid g = make_grid(-2.0, 2.0, 17);
  CHECK(g.index_near(0.0) == 8);
  CHECK(g.cell_of(g.t_max) == g.n_nodes - 2);
}

TEST_SUITE_END();
