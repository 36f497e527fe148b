#include "kgscat/evolution.hpp"

#include <cmath>

namespace kgscat {

namespace {
const cplx kI(0.0, 1.0);
}

// ---------------------------------------------------------------------------
// integrators

void dp45_integrate(const std::function<void(double, const Mat&, Mat&)>& rhs, double t0, double t1,
                    Mat& y, double rtol, double atol) {
  dp45_integrate_t(rhs, t0, t1, y, rtol, atol);
}

void rk4_integrate(const std::function<void(double, const Mat&, Mat&)>& rhs, double t0, double t1,
                   Mat& y, double dt) {
  if (t0 == t1) return;
  double dir = t1 > t0 ? 1.0 : -1.0;
  long n = std::lround(std::ceil(std::abs(t1 - t0) / dt));
  double h = (t1 - t0) / double(n);
  Mat k1, k2, k3, k4, tmp;
  k1.resizeLike(y);
  k2.resizeLike(y);
  k3.resizeLike(y);
  k4.resizeLike(y);
  tmp.resizeLike(y);
  double t = t0;
  for (long i = 0; i < n; ++i) {
    rhs(t, y, k1);
    tmp = y + (h / 2) * k1;
    rhs(t + h / 2, tmp, k2);
    tmp = y + (h / 2) * k2;
    rhs(t + h / 2, tmp, k3);
    tmp = y + h * k3;
    rhs(t + h, tmp, k4);
    y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t0 + (i + 1) * (t1 - t0) / double(n);
  }
  (void)dir;
}

// ---------------------------------------------------------------------------
// generators

ModelGenerator::ModelGenerator(const ModelCoefficients& mc) : N_(mc.basis.N), grid_(mc.grid) {
  a0_ = mc.a_family(0);
  a1_ = mc.a_family(1);
  r0_ = mc.r_family(0);
  r1_ = mc.r_family(1);
}

void ModelGenerator::apply_iH(double t, const Mat& in, Mat& out) const {
  int i0;
  double wv[2], wd[2];
  hermite_weights(grid_, t, i0, wv, wd);
  Mat a_t = wv[0] * a0_.at(i0) + wv[1] * a0_.at(i0 + 1) + wd[0] * a1_.at(i0) + wd[1] * a1_.at(i0 + 1);
  Mat r_t = wv[0] * r0_.at(i0) + wv[1] * r0_.at(i0 + 1) + wd[0] * r1_.at(i0) + wd[1] * r1_.at(i0 + 1);
  out.resizeLike(in);
  auto top = in.topRows(N_);
  auto bot = in.bottomRows(N_);
  out.topRows(N_) = kI * bot;
  out.bottomRows(N_) = kI * (a_t * top) - r_t * bot;
}

FamilyGenerator::FamilyGenerator(OpFamily H, OpFamily dH) : H_(std::move(H)), dH_(std::move(dH)) {}

FamilyGenerator::FamilyGenerator(const OpFamily& H) : H_(H), dH_(H.time_derivative()) {}

void FamilyGenerator::apply_iH(double t, const Mat& in, Mat& out) const {
  int i0;
  double wv[2], wd[2];
  hermite_weights(H_.grid, t, i0, wv, wd);
  Mat H_t =
      wv[0] * H_.at(i0) + wv[1] * H_.at(i0 + 1) + wd[0] * dH_.at(i0) + wd[1] * dH_.at(i0 + 1);
  out = kI * (H_t * in);
}

// ---------------------------------------------------------------------------

namespace {

void integrate(const Generator& gen, double t0, double t1, Mat& y, const EvolutionOptions& opts) {
  auto rhs = [&gen](double t, const Mat& in, Mat& out) { gen.apply_iH(t, in, out); };
  if (opts.method == EvolutionOptions::Method::adaptive)
    dp45_integrate(rhs, t0, t1, y, opts.rtol, opts.atol);
  else
    rk4_integrate(rhs, t0, t1, y, opts.dt_fixed);
}

}  // namespace

Mat evolve(const Generator& gen, double t, double s, const EvolutionOptions& opts) {
  require(gen.span_lo() - 1e-9 <= std::min(t, s) && std::max(t, s) <= gen.span_hi() + 1e-9,
          errc::invalid_config, "evolution endpoints outside the generator span");
  Mat U = Mat::Identity(gen.dim(), gen.dim());
  integrate(gen, s, t, U, opts);
  return U;
}

std::vector<Mat> evolve_path(const Generator& gen, double anchor, const std::vector<double>& ts,
                             const EvolutionOptions& opts) {
  std::vector<int> up, down;
  for (int i = 0; i < int(ts.size()); ++i) (ts[i] >= anchor ? up : down).push_back(i);
  std::sort(up.begin(), up.end(), [&](int a, int b) { return ts[a] < ts[b]; });
  std::sort(down.begin(), down.end(), [&](int a, int b) { return ts[a] > ts[b]; });

  std::vector<Mat> out(ts.size());
  Mat U = Mat::Identity(gen.dim(), gen.dim());
  double t = anchor;
  for (int i : up) {
    integrate(gen, t, ts[i], U, opts);
    t = ts[i];
    out[i] = U;
  }
  U = Mat::Identity(gen.dim(), gen.dim());
  t = anchor;
  for (int i : down) {
    integrate(gen, t, ts[i], U, opts);
    t = ts[i];
    out[i] = U;
  }
  return out;
}

Mat evolve_apply(const Generator& gen, double t, double s, const Mat& data,
                 const EvolutionOptions& opts) {
  Mat y = data;
  integrate(gen, s, t, y, opts);
  return y;
}

double check_symplectic(const Mat& U, const Mat& q, const Weight& Wt, const Weight& Ws) {
  Mat Wq_t = block_scalar(Wt.W) * q;
  Mat Wq_s = block_scalar(Ws.W) * q;
  return op_norm(U.adjoint() * Wq_t * U - Wq_s) / op_norm(Wq_s);
}

Mat evolve_diag(const DiagFrame& frame, double t, double s, const EvolutionOptions& opts) {
  FamilyGenerator gp(frame.eps_plus);
  FamilyGenerator gm(frame.eps_minus);
  Mat Up = evolve(gp, t, s, opts);
  Mat Um = evolve(gm, t, s, opts);
  return block_diag2(Up, Um);
}

InteractionGapReport interaction_gap(const ModelCoefficients& model, const DiagFrame& frame,
                                     double t, double s, const EvolutionOptions& opts,
                                     double p_threshold, double r2_threshold) {
  ModelGenerator gen(model);
  Mat U = evolve(gen, t, s, opts);
  Mat Ud = evolve_diag(frame, t, s, opts);
  int it = frame.grid.index_near(t), is = frame.grid.index_near(s);
  Mat D = U - frame.T_at(it) * Ud * frame.T_inv_at(is);

  InteractionGapReport rep;
  rep.norm = op_norm(D);
  rep.pass = true;
  rep.worst_exponent = std::numeric_limits<double>::infinity();
  for (int rb = 0; rb < 2; ++rb)
    for (int cb = 0; cb < 2; ++cb) {
      SmoothingReport sr = smoothing_order(block_of(D, rb, cb), model.basis);
      bool ok = sr.entry_fit.sentinel_inf || (sr.entry_fit.exponent >= p_threshold &&
                                              sr.entry_fit.r_squared >= r2_threshold);
      rep.pass = rep.pass && ok;
      if (!sr.entry_fit.sentinel_inf && sr.entry_fit.exponent < rep.worst_exponent) {
        rep.worst_exponent = sr.entry_fit.exponent;
        rep.worst_r2 = sr.entry_fit.r_squared;
      }
      rep.blocks[rb * 2 + cb] = sr;
    }
  return rep;
}

SplitEvolution split_evolution(const Mat& U_t_t0, const Mat& U_t0_s, const Mat& cref_plus,
                               const Mat& cref_minus) {
  SplitEvolution se;
  se.plus = U_t_t0 * cref_plus * U_t0_s;
  se.minus = U_t_t0 * cref_minus * U_t0_s;
  return se;
}

}  // namespace kgscat
