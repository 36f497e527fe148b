#include "kgscat/states.hpp"

namespace kgscat {

namespace {
const cplx kI(0.0, 1.0);

Mat hermitian_part(const Mat& m) { return 0.5 * (m + Mat(m.adjoint())); }

double min_weighted_eig(const Mat& op, const Weight& W) {
  Mat Wh = block_scalar(W.Whalf), Whi = block_scalar(W.Whalfinv);
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(Wh * op * Whi));
  return es.eigenvalues().minCoeff();
}

double weighted_block_norm(const Mat& M, const Weight& W) {
  return op_norm(block_scalar(W.Whalf) * M * block_scalar(W.Whalfinv));
}

void fill_lambdas(Covariances& c) {
  int N = int(c.c_plus.rows()) / 2;
  Mat q = q_matrix(N);
  c.lambda_plus = q * c.c_plus;
  c.lambda_minus = -q * c.c_minus;
}

}  // namespace

const char* tag_name(Covariances::Tag t) {
  switch (t) {
    case Covariances::Tag::vac: return "vac";
    case Covariances::Tag::ref: return "ref";
    case Covariances::Tag::in_state: return "in";
    case Covariances::Tag::out_state: return "out";
  }
  return "?";
}

Covariances vacuum_covariances(const Mat& a_asym, const ModeBasis& basis, const Weight& W) {
  WeightedEig e = weighted_eig(a_asym, W);
  require(e.evals.minCoeff() > 0, errc::not_positive, "asymptotic operator not positive");
  Mat sq = apply_spectral(e, [](double x) { return std::sqrt(x); });
  Mat sqi = apply_spectral(e, [](double x) { return 1.0 / std::sqrt(x); });
  int N = basis.N;
  Mat I = Mat::Identity(N, N);
  Covariances c;
  c.tag = Covariances::Tag::vac;
  c.c_plus = 0.5 * block2(I, sqi, sq, I);
  c.c_minus = 0.5 * block2(I, -sqi, -sq, I);
  fill_lambdas(c);
  return c;
}

Covariances reference_covariances(const DiagFrame& frame, const ModelCoefficients& model,
                                  double t0) {
  (void)model;
  int i = frame.grid.index_near(t0);
  int N = frame.basis.N;
  Mat T = frame.T_at(i), Ti = frame.T_inv_at(i);
  Covariances c;
  c.tag = Covariances::Tag::ref;
  c.t_anchor = frame.grid.node(i);
  c.c_plus = T * pi_plus(N) * Ti;
  c.c_minus = T * pi_minus(N) * Ti;
  fill_lambdas(c);
  return c;
}

Mat reference_plus_block_formula(const DiagFrame& frame, int node) {
  const Mat& bp = frame.b_plus.at(node);
  const Mat& bm = frame.b_minus.at(node);
  Mat gapinv = frame.gap_half_inv.at(node) * frame.gap_half_inv.at(node);
  return block2(Mat(-gapinv * bm), gapinv, Mat(-bp * gapinv * bm), Mat(bp * gapinv));
}

Covariances transport_covariances(const Mat& U_to_anchor, const Mat& U_anchor_to,
                                  const Covariances& c, double to_t) {
  Covariances out = c;
  out.t_anchor = to_t;
  out.c_plus = U_to_anchor * c.c_plus * U_anchor_to;
  out.c_minus = U_to_anchor * c.c_minus * U_anchor_to;
  out.ref_diff_plus.reset();
  out.ref_diff_minus.reset();
  fill_lambdas(out);
  return out;
}

StateReport validate_state(const Covariances& c, const ModeBasis& basis, const Weight& W,
                           double tol_complementarity, double tol_idem, double tol_pos) {
  StateReport r;
  int N = basis.N;
  Mat I = Mat::Identity(2 * N, 2 * N);
  r.complementarity = weighted_block_norm(c.c_plus + c.c_minus - I, W);
  r.idempotency_plus = weighted_block_norm(c.c_plus * c.c_plus - c.c_plus, W);
  r.idempotency_minus = weighted_block_norm(c.c_minus * c.c_minus - c.c_minus, W);
  r.min_eig_lambda_plus = min_weighted_eig(c.lambda_plus, W);
  r.min_eig_lambda_minus = min_weighted_eig(c.lambda_minus, W);
  r.pass = r.complementarity <= tol_complementarity && r.idempotency_plus <= tol_idem &&
           r.idempotency_minus <= tol_idem && r.min_eig_lambda_plus >= -tol_pos &&
           r.min_eig_lambda_minus >= -tol_pos;
  return r;
}

Mat ZFamily::Z_at(int node) const {
  Mat T = frame->T_at(node);
  if (trivial_flow) return T;
  return block_scalar(comp_inv[node]) * T;
}

Mat ZFamily::Z_inv_at(int node) const {
  Mat Ti = frame->T_inv_at(node);
  if (trivial_flow) return Ti;
  Eigen::PartialPivLU<Mat> lu(comp_inv[node]);
  return Ti * block_scalar(lu.inverse());
}

Mat ZFamily::Z_out() const {
  if (trivial_flow) return T_out;
  return block_scalar(comp_inv_out) * T_out;
}

Mat ZFamily::Z_in() const {
  if (trivial_flow) return T_in;
  return block_scalar(comp_inv_in) * T_in;
}

ZFamily build_Z(const ModelCoefficients& model, const DiagFrame& frame, const ShiftFlow& flow) {
  ZFamily z;
  z.grid = frame.grid;
  z.basis = frame.basis;
  z.frame = &frame;
  z.trivial_flow = flow.trivial;
  if (!flow.trivial) {
    z.comp_inv.resize(z.grid.n_nodes);
    for (int i = 0; i < z.grid.n_nodes; ++i)
      z.comp_inv[i] = composition_op(z.basis, invert_circle_map(z.basis, flow.y[i]));
    z.comp_inv_out = composition_op(z.basis, invert_circle_map(z.basis, flow.y_out));
    z.comp_inv_in = composition_op(z.basis, invert_circle_map(z.basis, flow.y_in));
  }

  // asymptotic frames from the asymptotic operators
  auto asym_T = [&](const Mat& a_asym, const Weight& W) {
    WeightedEig e = weighted_eig(a_asym, W);
    Mat quarter = apply_spectral(e, [](double x) { return std::pow(x, 0.25); });
    Mat quarter_inv = apply_spectral(e, [](double x) { return std::pow(x, -0.25); });
    const cplx c = 1.0 / (kI * std::sqrt(2.0));
    return Mat(c * block2(quarter_inv, -quarter_inv, quarter, quarter));
  };
  z.T_out = asym_T(model.a_out, model.weight_out());
  z.T_in = asym_T(model.a_in, model.weight_in());
  return z;
}

DecayFit z_convergence(const ZFamily& z, bool out_direction, double fit_t_lo, double fit_t_hi) {
  std::vector<std::pair<double, double>> vals;
  Mat Za = out_direction ? z.Z_out() : z.Z_in();
  int n = z.grid.n_nodes;
  Mat I = Mat::Identity(2 * z.basis.N, 2 * z.basis.N);
  for (int i = 0; i < n; ++i) {
    double t = z.grid.node(i);
    double at = std::abs(t);
    if ((out_direction && t <= 0) || (!out_direction && t >= 0)) continue;
    if (at < fit_t_lo || at > fit_t_hi) continue;
    vals.push_back({at, op_norm(z.Z_inv_at(i) * Za - I) + 1e-300});
  }
  // thin to a manageable number of SVD evaluations
  std::vector<std::pair<double, double>> thin;
  int stride = std::max<size_t>(1, vals.size() / 24);
  for (size_t i = 0; i < vals.size(); i += stride) thin.push_back(vals[i]);
  double vmax = 0;
  for (auto& v : thin) vmax = std::max(vmax, v.second);
  if (vmax <= kExactFloor) {
    DecayFit f;
    f.exact = true;
    f.sentinel_inf = true;
    f.exponent = std::numeric_limits<double>::infinity();
    f.r_squared = 1.0;
    return f;
  }
  return fit_time_decay(thin);
}

std::vector<double> geometric_samples(const TimeGrid& grid, double t_lo, double t_hi, int count,
                                      bool negative) {
  require(count >= 4 && t_lo > 0 && t_hi > t_lo, errc::invalid_config,
          "need at least 4 geometric samples with 0 < t_lo < t_hi");
  std::vector<double> out;
  double prev = 0;
  for (int k = 0; k < count; ++k) {
    double t = t_lo * std::pow(t_hi / t_lo, double(k) / (count - 1));
    if (negative) t = -t;
    int i = grid.index_near(t);
    double snapped = grid.node(i);
    if (!out.empty() && std::abs(snapped) <= std::abs(prev)) continue;
    require(grid.contains(snapped), errc::invalid_config, "sample time outside the grid");
    out.push_back(snapped);
    prev = snapped;
  }
  require(out.size() >= 4, errc::insufficient_samples, "grid too coarse for the sample ladder");
  return out;
}

ScatteringResult scattering_covariances(const ModelCoefficients& model, const DiagFrame& frame,
                                        const ScatteringOptions& opts) {
  require(!opts.sample_times.empty(), errc::invalid_config, "no scattering sample times");
  ScatteringResult res;
  res.trace.times = opts.sample_times;
  int N = model.basis.N;
  Mat I2N = Mat::Identity(2 * N, 2 * N);

  std::optional<ModeDecomposition> md;
  if (opts.allow_mode_path) md = detect_separable(model);

  Covariances ref = reference_covariances(frame, model, 0.0);

  if (md) {
    ModeFrameCurves fc = mode_riccati_frame(*md, opts.mode_n_max, opts.gap_floor);
    ModeScattering sc = mode_scattering(*md, fc, opts.out_direction, opts.sample_times,
                                        opts.rtol, opts.atol);
    res.used_mode_path = true;
    res.trace.increments = sc.increments;
    res.trace.tail_fraction = sc.tail_fraction;
    res.trace.boundary_term_norm = sc.boundary_term_norm;

    res.cov.tag = opts.out_direction ? Covariances::Tag::out_state : Covariances::Tag::in_state;
    res.cov.t_anchor = 0;
    res.cov.c_plus = md->assemble(sc.c_plus_limit);
    res.cov.c_minus = I2N - res.cov.c_plus;

    // difference route: c - c_ref = T(0) G T^{-1}(0) per mode, boundary term
    // dropped with its norm recorded
    int i0 = md->grid.index_near(0.0);
    std::vector<Eigen::Matrix2cd> diff(N);
    for (int j = 0; j < N; ++j) {
      cplx b = fc.b[i0][j].value();
      cplx g = b + std::conj(b);
      cplx xi = 1.0 / std::sqrt(g);
      const cplx inv_i = 1.0 / kI;
      Eigen::Matrix2cd T0;
      T0 << inv_i * xi, -inv_i * xi, inv_i * b * xi, inv_i * std::conj(b) * xi;
      diff[j] = T0 * sc.g_integral[j] * T0.inverse();
    }
    res.cov.ref_diff_plus = md->assemble(diff);
    res.cov.ref_diff_minus = -*res.cov.ref_diff_plus;
    res.trace.route_discrepancy =
        op_norm(res.cov.c_plus - (ref.c_plus + *res.cov.ref_diff_plus));
  } else {
    // dense route: one anchored path, vacuum projections conjugated back
    ModelGenerator gen(model);
    EvolutionOptions eopts;
    eopts.rtol = opts.rtol;
    eopts.atol = opts.atol;
    std::vector<Mat> path = evolve_path(gen, 0.0, opts.sample_times, eopts);

    Weight Wasym = opts.out_direction ? model.weight_out() : model.weight_in();
    Covariances vac =
        vacuum_covariances(opts.out_direction ? model.a_out : model.a_in, model.basis, Wasym);

    int ns = int(opts.sample_times.size());
    std::vector<Mat> cs(ns);
    for (int k = 0; k < ns; ++k) {
      Eigen::PartialPivLU<Mat> lu(path[k]);
      cs[k] = lu.solve(vac.c_plus * path[k]);
    }
    const Weight& W0 = model.weight_at(model.grid.index_near(0.0));
    res.trace.increments.resize(ns - 1);
    for (int k = 0; k + 1 < ns; ++k)
      res.trace.increments[k] = weighted_block_norm(cs[k + 1] - cs[k], W0);

    std::vector<std::pair<double, double>> iv;
    for (int k = 0; k + 1 < ns; ++k)
      iv.push_back({std::abs(opts.sample_times[k + 1]), res.trace.increments[k] + 1e-300});
    double sigma = 0;
    double vmax = 0;
    for (auto& v : iv) vmax = std::max(vmax, v.second);
    if (vmax > kExactFloor) {
      res.trace.fit = fit_time_decay(iv);
      require(res.trace.fit.exponent > 0.05, errc::no_convergence,
              "scattering increments do not decay");
      double ratio = std::abs(opts.sample_times[ns - 1] / opts.sample_times[ns - 2]);
      double rr = std::pow(ratio, -res.trace.fit.exponent);
      sigma = rr / (1.0 - rr);
      res.trace.tail_fraction = sigma;
    } else {
      res.trace.fit.exact = true;
      res.trace.fit.sentinel_inf = true;
      res.trace.fit.exponent = std::numeric_limits<double>::infinity();
      res.trace.fit.r_squared = 1.0;
    }

    res.cov.tag = opts.out_direction ? Covariances::Tag::out_state : Covariances::Tag::in_state;
    res.cov.t_anchor = 0;
    res.cov.c_plus = cs[ns - 1] + sigma * (cs[ns - 1] - cs[ns - 2]);
    res.cov.c_minus = I2N - res.cov.c_plus;
    res.trace.route_discrepancy = op_norm(res.cov.c_plus - ref.c_plus);
  }

  if (res.used_mode_path && !res.trace.increments.empty()) {
    std::vector<std::pair<double, double>> iv;
    for (size_t k = 0; k + 1 < res.trace.times.size(); ++k)
      iv.push_back({std::abs(res.trace.times[k + 1]), res.trace.increments[k] + 1e-300});
    double vmax = 0;
    for (auto& v : iv) vmax = std::max(vmax, v.second);
    if (vmax > kExactFloor) {
      res.trace.fit = fit_time_decay(iv);
    } else {
      res.trace.fit.exact = true;
      res.trace.fit.sentinel_inf = true;
      res.trace.fit.exponent = std::numeric_limits<double>::infinity();
      res.trace.fit.r_squared = 1.0;
    }
  }

  fill_lambdas(res.cov);
  return res;
}

std::pair<Mat, Mat> two_point(const Mat& U_t_0, const Mat& U_0_s, const Covariances& c) {
  // the positive-frequency kernel transports the complementary projection;
  // fixed by the closed-form vacuum kernel e^{-i eps (t-s)} / (2 eps) and the
  // positivity of the induced spacetime form
  Mat lp = -block_of(U_t_0 * c.c_minus * U_0_s, 0, 1);
  Mat lm = block_of(U_t_0 * c.c_plus * U_0_s, 0, 1);
  return {lp, lm};
}

Mat causal_propagator(const Mat& U_t_s) { return kI * block_of(U_t_s, 0, 1); }

HadamardReport hadamard_difference(const Covariances& state, const Covariances& ref,
                                   const ModeBasis& basis, int n_lo, int n_hi, double p_threshold,
                                   double r2_threshold) {
  HadamardReport rep;
  Mat dplus, dminus;
  if (state.ref_diff_plus && ref.tag == Covariances::Tag::ref) {
    dplus = *state.ref_diff_plus;
    dminus = *state.ref_diff_minus;
    rep.used_precise_difference = true;
  } else {
    dplus = state.c_plus - ref.c_plus;
    dminus = state.c_minus - ref.c_minus;
  }
  // the minus difference is exactly the negative of the plus difference, so
  // the four blocks of the plus difference cover both signs
  double mismatch = op_norm(dplus + dminus);
  require(mismatch <= 1e-8 * std::max(1.0, op_norm(dplus)), errc::invalid_data,
          "covariance differences violate complementarity");
  rep.pass = true;
  rep.worst_exponent = std::numeric_limits<double>::infinity();
  for (int rb = 0; rb < 2; ++rb)
    for (int cb = 0; cb < 2; ++cb) {
      SmoothingReport sr =
          smoothing_order(block_of(dplus, rb, cb), basis, 4, n_lo, n_hi, p_threshold,
                          r2_threshold);
      rep.blocks[rb * 2 + cb] = sr;
      rep.pass = rep.pass && sr.numerically_smoothing;
      rep.all_sentinel = rep.all_sentinel && sr.entry_fit.sentinel_inf;
      if (!sr.entry_fit.sentinel_inf && sr.entry_fit.exponent < rep.worst_exponent) {
        rep.worst_exponent = sr.entry_fit.exponent;
        rep.worst_r2 = sr.entry_fit.r_squared;
      }
    }
  return rep;
}

}  // namespace kgscat
