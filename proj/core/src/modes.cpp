#include "kgscat/modes.hpp"

namespace kgscat {

namespace {
const cplx kI(0.0, 1.0);

// projection of v onto the direction of ref, plus the relative residual
double project(const RVec& v, const RVec& ref, double& resid) {
  double c = v.dot(ref) / ref.squaredNorm();
  resid = (v - c * ref).norm();
  return c;
}

}  // namespace

CJet ModeDecomposition::alpha_jet(int node, int j) const {
  return complexify(phi2[node] * mu[j] + pot[node]);
}

CJet ModeDecomposition::rho_jet(int node) const { return complexify(rho[node]); }

Mat ModeDecomposition::assemble(const std::vector<Eigen::Matrix2cd>& blocks) const {
  int N = basis.N;
  Vec d00(N), d01(N), d10(N), d11(N);
  for (int j = 0; j < N; ++j) {
    d00[j] = blocks[j](0, 0);
    d01[j] = blocks[j](0, 1);
    d10[j] = blocks[j](1, 0);
    d11[j] = blocks[j](1, 1);
  }
  auto conj_diag = [&](const Vec& d) { return Mat(Q * d.asDiagonal() * Qinv); };
  return block2(conj_diag(d00), conj_diag(d01), conj_diag(d10), conj_diag(d11));
}

Mat ModeDecomposition::assemble_scalar(const Vec& diag) const {
  return Q * diag.asDiagonal() * Qinv;
}

std::optional<ModeDecomposition> detect_separable(const ModelCoefficients& mc, double tol) {
  if (!mc.scalar_damping) return std::nullopt;
  int n = mc.grid.n_nodes;
  int i0 = mc.grid.index_near(0.0);
  const RVec& g_ref = mc.ghalf_inv[i0][0];
  double g_scale = g_ref.norm();

  ModeDecomposition md;
  md.basis = mc.basis;
  md.grid = mc.grid;
  md.phi2.resize(n);
  md.pot.resize(n);
  md.rho.resize(n);

  for (int i = 0; i < n; ++i) {
    RJet phi;
    phi.depth = kJetDepth;
    RJet v;
    v.depth = kJetDepth;
    RJet rj;
    rj.depth = kJetDepth - 1;
    double fact = 1;
    for (int k = 0; k <= kJetDepth; ++k) {
      if (k > 0) fact *= k;
      double resid;
      double co = project(mc.ghalf_inv[i][k], g_ref, resid);
      if (resid > tol * std::max(1.0, g_scale * std::abs(co) + g_scale)) return std::nullopt;
      phi.c[k] = co / fact;

      const RVec& pv = mc.pot[i][k];
      double mean = pv.mean();
      if ((pv.array() - mean).abs().maxCoeff() > tol * std::max(1.0, std::abs(mean)))
        return std::nullopt;
      v.c[k] = mean / fact;

      if (k < kJetDepth) {
        const RVec& rv = mc.damp[i][k];
        double rmean = rv.mean();
        if ((rv.array() - rmean).abs().maxCoeff() > tol * std::max(1.0, std::abs(rmean)))
          return std::nullopt;
        rj.c[k] = rmean / fact;
      }
    }
    md.phi2[i] = phi * phi;
    md.pot[i] = v;
    md.rho[i] = rj;
  }

  // asymptotic fields must live on the same ray
  double resid_out, resid_in;
  double phi_out = project(mc.ghalf_inv_out, g_ref, resid_out);
  double phi_in = project(mc.ghalf_inv_in, g_ref, resid_in);
  if (resid_out > tol * g_scale || resid_in > tol * g_scale) return std::nullopt;
  double vout = mc.pot_out.mean(), vin = mc.pot_in.mean();
  if ((mc.pot_out.array() - vout).abs().maxCoeff() > tol * std::max(1.0, std::abs(vout)))
    return std::nullopt;
  if ((mc.pot_in.array() - vin).abs().maxCoeff() > tol * std::max(1.0, std::abs(vin)))
    return std::nullopt;
  md.phi2_out = phi_out * phi_out;
  md.phi2_in = phi_in * phi_in;
  md.pot_out = vout;
  md.pot_in = vin;

  // fixed eigenframe of A1 = -M_g D M_g D, W-orthonormal for the reference
  // density
  Mat D = derivative_op(mc.basis);
  Mat G = mult_op(mc.basis, g_ref);
  Mat A1 = -G * D * G * D;
  md.W_ref = make_weight(mc.basis, mc.dens[i0][0]);
  WeightedEig e = weighted_eig(A1, md.W_ref);
  md.Q = e.P;
  md.Qinv = e.Pinv;
  md.mu = e.evals.cwiseMax(0.0);

  md.alpha_out = (md.phi2_out * md.mu).array() + md.pot_out;
  md.alpha_in = (md.phi2_in * md.mu).array() + md.pot_in;

  // cross-check: the assembled a(t) at the reference node must match
  Mat a_probe = mc.a_at(i0);
  Mat a_mode = md.assemble_scalar(
      Vec(((md.phi2[i0].value() * md.mu).array() + md.pot[i0].value()).cast<cplx>()));
  if ((a_probe - a_mode).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, a_probe.cwiseAbs().maxCoeff()))
    return std::nullopt;

  return md;
}

ModeFrameCurves mode_riccati_frame(const ModeDecomposition& md, int n_max, double gap_floor) {
  require(n_max >= 1 && n_max <= kJetDepth - 3, errc::invalid_config,
          "mode pipeline supports 1 <= n_max <= jet depth - 3");
  int n = md.grid.n_nodes;
  int N = md.basis.N;
  ModeFrameCurves fc;
  fc.n_iter = n_max;
  for (auto* v : {&fc.eps, &fc.b, &fc.res, &fc.h11, &fc.h22, &fc.h12, &fc.h21})
    v->assign(n, std::vector<CJet>(N));

  for (int i = 0; i < n; ++i) {
    CJet rho = md.rho_jet(i);
    for (int j = 0; j < N; ++j) {
      CJet alpha = md.alpha_jet(i, j);
      require(alpha.value().real() > 0, errc::not_positive, "mode curve lost positivity");
      CJet eps = sqrt(alpha);
      CJet epsi = inverse(eps);
      CJet a0 = (kI * 0.5) * (epsi * eps.d() + rho);
      CJet c = a0;
      for (int it = 1; it <= n_max; ++it)
        c = a0 + 0.5 * (epsi * (kI * c.d() + kI * (rho * c) - c * c));
      CJet b = eps + c;
      CJet res = kI * b.d() - b * b + alpha + kI * (rho * b);

      CJet gap = b + conj(b);
      require(gap.value().real() >= gap_floor * 2.0 * eps.value().real(),
              errc::not_positive,
              "frequency gap fell below the floor; use the dense pipeline with enforce_gap");
      CJet X = sqrt(gap);
      CJet Xi = inverse(X);
      CJet dXiX = Xi.d() * X;

      fc.eps[i][j] = eps;
      fc.b[i][j] = b;
      fc.res[i][j] = res;
      fc.h11[i][j] = conj(b) + kI * rho - conj(res) / gap - kI * dXiX;
      fc.h22[i][j] = (-1.0) * b + kI * rho + res / gap - kI * dXiX;
      fc.h12[i][j] = conj(res) / gap;
      fc.h21[i][j] = (-1.0) * (res / gap);
    }
  }
  return fc;
}

namespace {

// Hermite-interpolated scalar curve: values and first derivatives per node.
struct Curve {
  const TimeGrid* grid;
  std::vector<cplx> v, d;

  cplx operator()(double t) const {
    int i0;
    double wv[2], wd[2];
    hermite_weights(*grid, t, i0, wv, wd);
    return wv[0] * v[i0] + wv[1] * v[i0 + 1] + wd[0] * d[i0] + wd[1] * d[i0 + 1];
  }
};

Curve make_curve(const TimeGrid& g, const std::vector<std::vector<CJet>>& jets, int j) {
  Curve c;
  c.grid = &g;
  c.v.resize(g.n_nodes);
  c.d.resize(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) {
    c.v[i] = jets[i][j].value();
    c.d[i] = jets[i][j].derivative(1);
  }
  return c;
}

Curve make_curve_fn(const TimeGrid& g, const std::function<CJet(int)>& jet_at) {
  Curve c;
  c.grid = &g;
  c.v.resize(g.n_nodes);
  c.d.resize(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) {
    CJet jv = jet_at(i);
    c.v[i] = jv.value();
    c.d[i] = jv.derivative(1);
  }
  return c;
}

using M2 = Eigen::Matrix2cd;

}  // namespace

M2 mode_evolve_direct(const ModeDecomposition& md, int j, double t, double s, double rtol,
                      double atol) {
  Curve ac = make_curve_fn(md.grid, [&](int i) { return md.alpha_jet(i, j); });
  Curve rc = make_curve_fn(md.grid, [&](int i) { return md.rho_jet(i); });
  M2 U = M2::Identity();
  auto rhs = [&](double tt, const M2& y, M2& out) {
    cplx a = ac(tt), r = rc(tt);
    out.row(0) = kI * y.row(1);
    out.row(1) = kI * a * y.row(0) - r * y.row(1);
  };
  dp45_integrate_t(rhs, s, t, U, rtol, atol);
  return U;
}

M2 mode_evolve_frame(const ModeDecomposition& md, const ModeFrameCurves& fc, int j, double t,
                     double s, double rtol, double atol) {
  Curve c11 = make_curve(md.grid, fc.h11, j), c22 = make_curve(md.grid, fc.h22, j);
  Curve c12 = make_curve(md.grid, fc.h12, j), c21 = make_curve(md.grid, fc.h21, j);
  M2 U = M2::Identity();
  auto rhs = [&](double tt, const M2& y, M2& out) {
    M2 H;
    H << c11(tt), c12(tt), c21(tt), c22(tt);
    out = kI * (H * y);
  };
  dp45_integrate_t(rhs, s, t, U, rtol, atol);
  return U;
}

M2 mode_cref_plus(const ModeFrameCurves& fc, int node, int j) {
  cplx b = fc.b[node][j].value();
  cplx g = b + std::conj(b);
  M2 c;
  c << std::conj(b) / g, 1.0 / g, b * std::conj(b) / g, b / g;
  return c;
}

M2 mode_vac_plus(double alpha_asym) {
  double eps = std::sqrt(alpha_asym);
  M2 c;
  c << 0.5, 0.5 / eps, 0.5 * eps, 0.5;
  return c;
}

ModeScattering mode_scattering(const ModeDecomposition& md, const ModeFrameCurves& fc,
                               bool out_direction, const std::vector<double>& sample_times,
                               double rtol, double atol) {
  require(sample_times.size() >= 4, errc::insufficient_samples,
          "need at least 4 scattering samples");
  int N = md.basis.N;
  int ns = int(sample_times.size());
  for (int k = 0; k + 1 < ns; ++k)
    require(std::abs(sample_times[k + 1]) > std::abs(sample_times[k]), errc::invalid_config,
            "sample times must increase toward the asymptotic region");

  ModeScattering sc;
  sc.sample_times = sample_times;
  sc.increments.assign(ns - 1, 0.0);
  sc.c_plus_limit.resize(N);
  sc.g_integral.resize(N);

  const Eigen::VectorXd& alpha_asym = out_direction ? md.alpha_out : md.alpha_in;
  std::vector<std::vector<M2>> csample(ns, std::vector<M2>(N));
  std::vector<std::vector<M2>> gsample(ns, std::vector<M2>(N));

  for (int j = 0; j < N; ++j) {
    Curve ac = make_curve_fn(md.grid, [&](int i) { return md.alpha_jet(i, j); });
    Curve rc = make_curve_fn(md.grid, [&](int i) { return md.rho_jet(i); });
    Curve c11 = make_curve(md.grid, fc.h11, j), c22 = make_curve(md.grid, fc.h22, j);
    Curve c12 = make_curve(md.grid, fc.h12, j), c21 = make_curve(md.grid, fc.h21, j);

    // stacked state: rows 0-1 V = U(t,0); 2-3 Y = U_ad(t,0); 4-5 W = U_ad(0,t);
    // 6-7 G (difference integral)
    using M8 = Eigen::Matrix<cplx, 8, 2>;
    M8 y;
    y.setZero();
    y.block<2, 2>(0, 0) = M2::Identity();
    y.block<2, 2>(2, 0) = M2::Identity();
    y.block<2, 2>(4, 0) = M2::Identity();

    auto rhs = [&](double tt, const M8& st, M8& out) {
      cplx a = ac(tt), r = rc(tt);
      M2 V = st.block<2, 2>(0, 0), Y = st.block<2, 2>(2, 0), W = st.block<2, 2>(4, 0);
      M2 H;
      H << c11(tt), c12(tt), c21(tt), c22(tt);
      M2 C;  // [H_off, pi+]
      C << 0.0, -c12(tt), c21(tt), 0.0;
      out.block<2, 2>(0, 0).row(0) = kI * V.row(1);
      out.block<2, 2>(0, 0).row(1) = kI * a * V.row(0) - r * V.row(1);
      out.block<2, 2>(2, 0) = kI * (H * Y);
      out.block<2, 2>(4, 0) = -kI * (W * H);
      out.block<2, 2>(6, 0) = -kI * (W * C * Y);
    };

    M2 cvac = mode_vac_plus(alpha_asym[j]);
    double t = 0.0;
    for (int k = 0; k < ns; ++k) {
      dp45_integrate_t(rhs, t, sample_times[k], y, rtol, atol);
      t = sample_times[k];
      M2 V = y.block<2, 2>(0, 0);
      csample[k][j] = V.inverse() * cvac * V;
      gsample[k][j] = y.block<2, 2>(6, 0);
    }

    // boundary term at T_max: U_ad(0,T) (E pi+ E^{-1} - pi+) U_ad(T,0),
    // E = T^{-1}(T) T_asym per mode; vanishes in the limit and is dropped.
    int iT = md.grid.index_near(sample_times.back());
    cplx bT = fc.b[iT][j].value();
    cplx gT = bT + std::conj(bT);
    double epsA = std::sqrt(alpha_asym[j]);
    M2 Tt, Ta;
    cplx xi = 1.0 / std::sqrt(gT);
    const cplx inv_i = 1.0 / kI;
    // frame columns per mode: T = (1/i) [[xi, -xi], [b xi, conj(b) xi]]
    Tt << inv_i * xi, -inv_i * xi, inv_i * bT * xi, inv_i * std::conj(bT) * xi;
    double s2 = std::sqrt(2.0);
    Ta << inv_i / (s2 * std::sqrt(epsA)), -inv_i / (s2 * std::sqrt(epsA)),
        inv_i * std::sqrt(epsA) / s2, inv_i * std::sqrt(epsA) / s2;
    M2 E = Tt.inverse() * Ta;
    M2 pi_p = M2::Zero();
    pi_p(0, 0) = 1.0;
    M2 Y = y.block<2, 2>(2, 0), W = y.block<2, 2>(4, 0);
    M2 bterm = W * (E * pi_p * E.inverse() - pi_p) * Y;
    sc.boundary_term_norm = std::max(sc.boundary_term_norm, bterm.norm());
  }

  // weighted-frame increments (Q is W-orthonormal, so the weighted operator
  // norm is the max of the per-mode 2x2 norms)
  for (int k = 0; k + 1 < ns; ++k) {
    double worst = 0;
    for (int j = 0; j < N; ++j) {
      M2 d = csample[k + 1][j] - csample[k][j];
      worst = std::max(worst, d.jacobiSvd().singularValues()(0));
    }
    sc.increments[k] = worst;
  }

  // Richardson-style tail: assume increments keep decaying like the fitted
  // power law with the (geometric) sample ratio.
  std::vector<std::pair<double, double>> iv;
  for (int k = 0; k + 1 < ns; ++k)
    iv.push_back({std::abs(sample_times[k + 1]), sc.increments[k] + 1e-300});
  double sigma = 0;
  bool exact = true;
  for (auto& v : iv) exact = exact && v.second <= kExactFloor;
  if (!exact) {
    DecayFit fit = fit_time_decay(iv);
    require(fit.exponent > 0.05, errc::no_convergence,
            "scattering increments do not decay (fitted exponent " +
                std::to_string(fit.exponent) + ")");
    double ratio = std::abs(sample_times[ns - 1] / sample_times[ns - 2]);
    double rr = std::pow(ratio, -fit.exponent);
    sigma = rr / (1.0 - rr);
    sc.tail_fraction = sigma;
  }

  for (int j = 0; j < N; ++j) {
    M2 dlast = csample[ns - 1][j] - csample[ns - 2][j];
    sc.c_plus_limit[j] = csample[ns - 1][j] + sigma * dlast;
    M2 gdlast = gsample[ns - 1][j] - gsample[ns - 2][j];
    sc.g_integral[j] = gsample[ns - 1][j] + sigma * gdlast;
  }
  return sc;
}

}  // namespace kgscat
