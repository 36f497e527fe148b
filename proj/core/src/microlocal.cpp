#include "kgscat/microlocal.hpp"

namespace kgscat {

namespace {

// evaluation of the root metric factor g = h^{-1/2} and its x-derivative at
// arbitrary (t, x): Hermite in t of the stored jets, trigonometric in x
struct MetricRootEval {
  const ModelCoefficients* mc;
  std::vector<Vec> coef0, coef1;  // mode coefficients of g and dg/dt per node

  explicit MetricRootEval(const ModelCoefficients& m) : mc(&m) {
    int n = m.grid.n_nodes;
    coef0.resize(n);
    coef1.resize(n);
    for (int i = 0; i < n; ++i) {
      coef0[i] = mode_coefficients(m.basis, m.ghalf_inv[i][0].cast<cplx>());
      coef1[i] = mode_coefficients(m.basis, m.ghalf_inv[i][1].cast<cplx>());
    }
  }

  void eval(double t, double x, double& g, double& gx) const {
    int i0;
    double wv[2], wd[2];
    hermite_weights(mc->grid, t, i0, wv, wd);
    cplx s = 0, sx = 0;
    const ModeBasis& b = mc->basis;
    for (int j = 0; j < b.N; ++j) {
      double w = b.wavenumber(b.mode(j));
      cplx coef = wv[0] * coef0[i0][j] + wv[1] * coef0[i0 + 1][j] + wd[0] * coef1[i0][j] +
                  wd[1] * coef1[i0 + 1][j];
      cplx ph = std::exp(cplx(0, w * x));
      s += coef * ph;
      sx += coef * cplx(0, w) * ph;
    }
    g = s.real();
    gx = sx.real();
  }
};

}  // namespace

double circle_distance(double a, double b, double L) {
  double d = std::fmod(std::abs(a - b), L);
  return std::min(d, L - d);
}

double circular_mean(const RVec& density, const RVec& xs, double L) {
  cplx z = 0;
  for (int m = 0; m < xs.size(); ++m)
    z += density[m] * std::exp(cplx(0, 2.0 * pi * xs[m] / L));
  double ang = std::arg(z);
  if (ang < 0) ang += 2.0 * pi;
  return ang * L / (2.0 * pi);
}

PhasePoint hamiltonian_flow(const ModelCoefficients& model, PhasePoint p0, int sign, double t,
                            double s, double tol) {
  require(p0.k != 0, errc::invalid_config, "characteristic flow needs nonzero momentum");
  MetricRootEval ev(model);
  double sgn = sign >= 0 ? 1.0 : -1.0;
  Mat y(2, 1);
  y(0, 0) = p0.x;
  y(1, 0) = p0.k;
  auto rhs = [&](double tt, const Mat& in, Mat& out) {
    double g, gx;
    ev.eval(tt, in(0, 0).real(), g, gx);
    double k = in(1, 0).real();
    out.resizeLike(in);
    out(0, 0) = sgn * g * (k >= 0 ? 1.0 : -1.0);
    out(1, 0) = -sgn * gx * std::abs(k);
  };
  dp45_integrate(rhs, s, t, y, tol, tol * 1e-2);
  PhasePoint p;
  p.x = std::fmod(y(0, 0).real(), model.basis.L);
  if (p.x < 0) p.x += model.basis.L;
  p.k = y(1, 0).real();
  return p;
}

Wavepacket make_wavepacket(const ModeBasis& basis, const DiagFrame& frame,
                           const ModelCoefficients& model, PhasePoint p0, double sigma, int sign,
                           double t_launch) {
  double sigma_min = 2.0 * basis.L / basis.K;  // a few grid spacings
  require(sigma >= sigma_min && sigma <= basis.L / 8.0, errc::bad_packet,
          "packet width outside [" + std::to_string(sigma_min) + ", L/8]");
  require(std::abs(p0.k) >= 4.0 * 2.0 * pi / basis.L, errc::bad_packet,
          "packet momentum too close to the zero section");

  int N = basis.N;
  int node = frame.grid.index_near(t_launch);
  const Weight& W = model.weight_at(node);

  // periodized Gaussian envelope times a plane wave
  Vec u(N);
  for (int m = 0; m < N; ++m) {
    double acc = 0;
    for (int w = -3; w <= 3; ++w) {
      double d = basis.xs[m] - p0.x + w * basis.L;
      acc += std::exp(-d * d / (2.0 * sigma * sigma));
    }
    u[m] = acc * std::exp(cplx(0, p0.k * basis.xs[m]));
  }

  WeightedEig ea = weighted_eig(model.a_at(node), W);
  Mat eps = apply_spectral(ea, [](double x) { return std::sqrt(x); });
  Vec raw(2 * N);
  raw.head(N) = u;
  raw.tail(N) = double(sign) * (eps * u);

  Mat cp = frame.T_at(node) * (sign > 0 ? pi_plus(N) : pi_minus(N)) * frame.T_inv_at(node);
  Mat cm = Mat::Identity(2 * N, 2 * N) - cp;
  Vec proj = cp * raw;

  auto wnorm = [&](const Vec& v) {
    return std::sqrt(std::abs((v.head(N).adjoint() * W.W * v.head(N) +
                               v.tail(N).adjoint() * W.W * v.tail(N))(0, 0)));
  };
  double nrm = wnorm(proj);
  require(nrm > 1e-12, errc::bad_packet, "projection annihilated the packet");
  proj /= nrm;

  Wavepacket wp;
  wp.center = p0;
  wp.sigma = sigma;
  wp.sign = sign;
  wp.t_launch = frame.grid.node(node);
  wp.data = proj;
  wp.leakage = wnorm(Vec(cm * proj));
  require(wp.leakage <= 0.2, errc::bad_packet,
          "packet leaks into the opposite frequency component (leakage " +
              std::to_string(wp.leakage) + ")");

  // band-limit check: energy fraction beyond |k| > K/2
  Vec uhat = mode_coefficients(basis, Vec(proj.head(N)));
  double tot = uhat.squaredNorm(), high = 0;
  for (int j = 0; j < N; ++j)
    if (std::abs(basis.mode(j)) > basis.K / 2) high += std::norm(uhat[j]);
  require(high <= 1e-6 * tot, errc::bad_packet, "packet touches the truncation edge");
  return wp;
}

PropagationReport propagation_test(const ModelCoefficients& model, const DiagFrame& frame,
                                   const Wavepacket& wp, double t_final,
                                   const EvolutionOptions& opts, int flow_sign, int n_track) {
  PropagationReport rep;
  const ModeBasis& basis = model.basis;
  int N = basis.N;
  if (flow_sign == 0) flow_sign = wp.sign;

  rep.predicted = hamiltonian_flow(model, wp.center, flow_sign, t_final, wp.t_launch);

  ModelGenerator gen(model);

  auto measure = [&](double t, const Vec& psi, PropagationReport* into) {
    Vec phi = psi.head(N);
    RVec dens(N);
    for (int m = 0; m < N; ++m) dens[m] = std::norm(phi[m]);
    double xc = circular_mean(dens, basis.xs, basis.L);
    Vec phat = mode_coefficients(basis, phi);
    double tot = phat.squaredNorm(), km = 0;
    for (int j = 0; j < N; ++j) km += std::norm(phat[j]) * basis.wavenumber(basis.mode(j));
    km /= tot;
    if (into) {
      into->x_center = xc;
      into->k_mean = km;
      cplx z = 0;
      double wsum = 0;
      for (int m = 0; m < N; ++m) {
        z += dens[m] * std::exp(cplx(0, 2.0 * pi * basis.xs[m] / basis.L));
        wsum += dens[m];
      }
      double R = std::abs(z) / wsum;
      into->spread = std::sqrt(std::max(0.0, -2.0 * std::log(std::max(R, 1e-300)))) * basis.L /
                     (2.0 * pi);
    }
    return std::array<double, 4>{t, xc, km, 0.0};
  };

  // sampled track for CSV export and the sign-preservation diagnostic
  Vec psi = wp.data;
  double t = wp.t_launch;
  for (int s = 1; s <= n_track; ++s) {
    double tn = wp.t_launch + (t_final - wp.t_launch) * s / n_track;
    psi = evolve_apply(gen, tn, t, psi, opts);
    t = tn;
    auto row = measure(tn, psi, s == n_track ? &rep : nullptr);
    int node_t = frame.grid.index_near(tn);
    Mat cmt = frame.T_at(node_t) * (wp.sign > 0 ? pi_minus(N) : pi_plus(N)) *
              frame.T_inv_at(node_t);
    const Weight& Wt = model.weight_at(node_t);
    Vec lk = cmt * psi;
    row[3] = std::sqrt(std::abs((lk.head(N).adjoint() * Wt.W * lk.head(N) +
                                 lk.tail(N).adjoint() * Wt.W * lk.tail(N))(0, 0)));
    rep.track.push_back(row);
  }
  rep.leakage_final = rep.track.back()[3];

  rep.dx = circle_distance(rep.x_center, rep.predicted.x, basis.L);
  rep.dk = std::abs(rep.k_mean - rep.predicted.k);
  double elapsed = std::abs(t_final - wp.t_launch);
  double dx_budget = std::max(3.0 * wp.sigma, 5.0 * elapsed * wp.sigma * wp.sigma / basis.L);
  rep.pass = rep.dx <= dx_budget && rep.dk <= 0.1 * std::abs(wp.center.k);
  return rep;
}

}  // namespace kgscat
