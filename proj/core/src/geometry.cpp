#include "kgscat/geometry.hpp"

#include <cmath>

namespace kgscat {

namespace {

// smooth 0 -> 1 switch; the classic variant (1 + t/<t>)/2 has tail exponent 2,
// the `power` variant (1 + t/<t> (1 - <t>^{-p}))/2 has tail exponent p < 2.
RJet switch_profile(const RJet& t, double power) {
  RJet bracket2 = t * t + 1.0;
  RJet m = t * pow(bracket2, -0.5);
  if (power > 0.0 && power != 2.0) m = m * (1.0 - pow(bracket2, -0.5 * power));
  return (m + 1.0) * 0.5;
}

RJet bracket_pow(const RJet& t, double p) { return pow(t * t + 1.0, 0.5 * p); }

}  // namespace

RJet CoeffFactor::eval_jet(const RJet& t, const RJet& x, double L) const {
  switch (family) {
    case Family::constant:
      return RJet(value, t.depth);
    case Family::step:
      return RJet(left, t.depth) + (right - left) * switch_profile(t, power);
    case Family::exp_step:
      return exp(2.0 * (RJet(left, t.depth) + (right - left) * switch_profile(t, power)));
    case Family::cos_bump: {
      RJet g(1.0, t.depth);
      if (profile.kind == TimeProfile::Kind::step)
        g = RJet(profile.left, t.depth) +
            (profile.right - profile.left) * switch_profile(t, 0.0);
      else if (profile.kind == TimeProfile::Kind::inverse_power)
        g = bracket_pow(t, -profile.delta);
      RJet s, c;
      sincos((2.0 * pi * mode / L) * x, s, c);
      return RJet(base, t.depth) + amplitude * (g * c);
    }
    case Family::inverse_power:
      return RJet(base, t.depth) + amplitude * bracket_pow(t, -delta);
  }
  fail(errc::invalid_config, "unknown coefficient family");
}

RJet CoeffFactor::eval_dx_jet(const RJet& t, const RJet& x, double L) const {
  if (family != Family::cos_bump) return RJet(0.0, t.depth);
  RJet g(1.0, t.depth);
  if (profile.kind == TimeProfile::Kind::step)
    g = RJet(profile.left, t.depth) + (profile.right - profile.left) * switch_profile(t, 0.0);
  else if (profile.kind == TimeProfile::Kind::inverse_power)
    g = bracket_pow(t, -profile.delta);
  double w = 2.0 * pi * mode / L;
  RJet s, c;
  sincos(w * x, s, c);
  return amplitude * (-w) * (g * s);
}

RJet CoeffFactor::eval(const RJet& t, double x, double L) const {
  return eval_jet(t, RJet(x, t.depth), L);
}

double CoeffFactor::limit(bool out, double x, double L) const {
  double sw = out ? 1.0 : 0.0;
  switch (family) {
    case Family::constant:
      return value;
    case Family::step:
      return left + (right - left) * sw;
    case Family::exp_step:
      return std::exp(2.0 * (left + (right - left) * sw));
    case Family::cos_bump: {
      double g = 1.0;
      if (profile.kind == TimeProfile::Kind::step)
        g = out ? profile.right : profile.left;
      else if (profile.kind == TimeProfile::Kind::inverse_power)
        g = 0.0;
      return base + amplitude * std::cos(2.0 * pi * mode * x / L) * g;
    }
    case Family::inverse_power:
      return base;
  }
  fail(errc::invalid_config, "unknown coefficient family");
}

double CoeffFactor::decay_rate() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (family) {
    case Family::constant:
      return inf;
    case Family::step:
    case Family::exp_step:
      if (left == right) return inf;
      return power > 0.0 ? std::min(power, 2.0) : 2.0;
    case Family::cos_bump:
      if (amplitude == 0.0) return inf;
      if (profile.kind == TimeProfile::Kind::static_one) return inf;
      if (profile.kind == TimeProfile::Kind::step)
        return profile.left == profile.right ? inf : 2.0;
      return profile.delta;
    case Family::inverse_power:
      return amplitude == 0.0 ? inf : delta;
  }
  fail(errc::invalid_config, "unknown coefficient family");
}

RJet Coefficient::eval_jet(const RJet& t, const RJet& x, double L) const {
  RJet r(1.0, t.depth);
  bool first = true;
  for (const auto& f : factors) {
    RJet v = f.eval_jet(t, x, L);
    r = first ? v : r * v;
    first = false;
  }
  return r;
}

RJet Coefficient::eval_dx_jet(const RJet& t, const RJet& x, double L) const {
  RJet acc(0.0, t.depth);
  for (size_t i = 0; i < factors.size(); ++i) {
    RJet term = factors[i].eval_dx_jet(t, x, L);
    for (size_t j = 0; j < factors.size(); ++j)
      if (j != i) term = term * factors[j].eval_jet(t, x, L);
    acc = acc + term;
  }
  return acc;
}

RJet Coefficient::eval(const RJet& t, double x, double L) const {
  return eval_jet(t, RJet(x, t.depth), L);
}

double Coefficient::limit(bool out, double x, double L) const {
  double r = 1.0;
  for (const auto& f : factors) r *= f.limit(out, x, L);
  return r;
}

double Coefficient::decay_rate() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& f : factors) r = std::min(r, f.decay_rate());
  return r;
}

bool Coefficient::time_independent() const { return !std::isfinite(decay_rate()); }

bool Coefficient::is_zero() const {
  for (const auto& f : factors)
    if (f.family == CoeffFactor::Family::constant && f.value == 0.0) return true;
  return false;
}

SpacetimeSpec SpacetimeSpec::from_coefficients(Coefficient c, Coefficient b, Coefficient h,
                                               Coefficient V) {
  SpacetimeSpec s;
  s.c = std::move(c);
  s.b = std::move(b);
  s.h = std::move(h);
  s.V = std::move(V);
  double mu = std::min({s.c.decay_rate(), s.h.decay_rate(), s.V.decay_rate()});
  s.mu = std::isfinite(mu) ? mu : 2.0;
  double mup = s.b.is_zero() ? std::numeric_limits<double>::infinity() : s.b.decay_rate();
  s.mu_prime = std::isfinite(mup) ? mup : 1000.0;
  require(s.mu > 0, errc::invalid_config, "asymptotic rate mu must be positive");
  require(s.mu_prime > 1, errc::invalid_config, "shift decay rate mu' must exceed 1");
  return s;
}

// ---------------------------------------------------------------------------
// shift flow

namespace {

struct FlowOde {
  const Coefficient* b;
  double L;

  RVec rhs(double t, const RVec& y) const {
    RVec d(y.size());
    RJet tj(t, 0);
    for (int i = 0; i < y.size(); ++i) d[i] = b->eval(tj, y[i], L).value();
    return d;
  }
};

RVec rk4_step(const FlowOde& ode, double t, const RVec& y, double h) {
  RVec k1 = ode.rhs(t, y);
  RVec k2 = ode.rhs(t + h / 2, y + (h / 2) * k1);
  RVec k3 = ode.rhs(t + h / 2, y + (h / 2) * k2);
  RVec k4 = ode.rhs(t + h, y + h * k3);
  return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

// step-doubling adaptive RK4 from t0 to t1
RVec integrate_flow(const FlowOde& ode, double t0, double t1, RVec y, double tol) {
  if (t0 == t1) return y;
  double t = t0;
  double dir = t1 > t0 ? 1.0 : -1.0;
  double h = dir * std::min(0.1, std::abs(t1 - t0));
  int guard = 0;
  while ((t1 - t) * dir > 1e-14) {
    if (std::abs(h) > std::abs(t1 - t)) h = t1 - t;
    RVec big = rk4_step(ode, t, y, h);
    RVec half = rk4_step(ode, t, y, h / 2);
    RVec two = rk4_step(ode, t + h / 2, half, h / 2);
    double err = (big - two).cwiseAbs().maxCoeff() / 15.0;
    if (err < tol) {
      t += h;
      y = two;
      if (err < tol / 64) h *= 2;
    } else {
      h /= 2;
      require(std::abs(h) > 1e-12, errc::integration_failure, "shift flow step size underflow");
    }
    require(++guard < 2000000, errc::integration_failure, "shift flow stalled");
  }
  return y;
}

}  // namespace

ShiftFlow flow_of_shift(const SpacetimeSpec& spec, const TimeGrid& grid, const ModeBasis& basis) {
  ShiftFlow flow;
  flow.grid = grid;
  flow.y.assign(grid.n_nodes, RVec());

  RVec id = basis.xs;
  if (spec.b.is_zero()) {
    flow.trivial = true;
    for (int i = 0; i < grid.n_nodes; ++i) flow.y[i] = id;
    flow.y_out = id;
    flow.y_in = id;
    return flow;
  }
  flow.trivial = false;

  FlowOde ode{&spec.b, basis.L};
  const double tol = 1e-11;

  int i0 = grid.index_near(0.0);
  {
    RVec y = integrate_flow(ode, 0.0, grid.node(i0), id, tol);
    double t = grid.node(i0);
    flow.y[i0] = y;
    for (int i = i0 + 1; i < grid.n_nodes; ++i) {
      y = integrate_flow(ode, t, grid.node(i), y, tol);
      t = grid.node(i);
      flow.y[i] = y;
    }
    y = flow.y[i0];
    t = grid.node(i0);
    for (int i = i0 - 1; i >= 0; --i) {
      y = integrate_flow(ode, t, grid.node(i), y, tol);
      t = grid.node(i);
      flow.y[i] = y;
    }
  }

  for (int i = 0; i < grid.n_nodes; ++i) {
    const RVec& y = flow.y[i];
    for (int m = 0; m + 1 < y.size(); ++m)
      require(y[m + 1] > y[m], errc::invalid_geometry,
              "shift flow broke monotonicity of the circle map");
  }

  // asymptotic maps: integrate to 4*span, then add the fitted drift tail
  auto asymptotic = [&](bool out) {
    double span = std::max(std::abs(grid.t_min), grid.t_max);
    double T0 = out ? grid.t_max : grid.t_min;
    double T1 = (out ? 4.0 : -4.0) * span;
    RVec y = flow.y[out ? grid.n_nodes - 1 : 0];
    int n_seg = 16;
    std::vector<std::pair<double, double>> speed;
    double t = T0;
    for (int s = 1; s <= n_seg; ++s) {
      double tn = T0 + (T1 - T0) * s / n_seg;
      y = integrate_flow(ode, t, tn, y, tol);
      t = tn;
      speed.push_back({std::abs(tn), ode.rhs(tn, y).cwiseAbs().maxCoeff() + 1e-300});
    }
    RVec drift = ode.rhs(T1, y);
    double rate = spec.mu_prime;
    DecayFit f = fit_time_decay(speed);
    if (f.r_squared > 0.5 && f.exponent > 1.05) rate = f.exponent;
    // remaining integral of ydot ~ C |t|^{-rate} beyond |T1|
    double tail_scale = std::abs(T1) / (rate - 1.0);
    return RVec(y + tail_scale * drift);
  };
  flow.y_out = asymptotic(true);
  flow.y_in = asymptotic(false);
  return flow;
}

RVec invert_circle_map(const ModeBasis& basis, const RVec& y_samples) {
  int N = basis.N;
  Vec disp(N);
  for (int m = 0; m < N; ++m) disp[m] = y_samples[m] - basis.xs[m];
  Vec dhat = mode_coefficients(basis, disp);
  auto y_of = [&](double x) {
    cplx s = 0;
    for (int j = 0; j < N; ++j)
      s += dhat[j] * std::exp(cplx(0, basis.wavenumber(basis.mode(j)) * x));
    return x + s.real();
  };
  auto yp_of = [&](double x) {
    cplx s = 0;
    for (int j = 0; j < N; ++j) {
      double w = basis.wavenumber(basis.mode(j));
      s += dhat[j] * cplx(0, w) * std::exp(cplx(0, w * x));
    }
    return 1.0 + s.real();
  };
  RVec inv(N);
  for (int m = 0; m < N; ++m) {
    double target = basis.xs[m];
    double x = target - disp[m].real();
    for (int it = 0; it < 60; ++it) {
      double f = y_of(x) - target;
      double df = yp_of(x);
      require(df > 1e-8, errc::invalid_geometry, "circle map inversion lost monotonicity");
      double dx = f / df;
      x -= dx;
      if (std::abs(dx) < 1e-14) break;
    }
    require(std::abs(y_of(x) - target) < 1e-10, errc::invalid_geometry,
            "circle map inversion did not converge");
    inv[m] = x;
  }
  return inv;
}

// ---------------------------------------------------------------------------
// reduction to the model operator

namespace {

// t-jets of y(t, x_m) and dy/dx(t, x_m) at a node, from the flow ODE
// recursion and spectral x-derivatives of the node samples.
void flow_jets(const SpacetimeSpec& spec, const ShiftFlow& flow, const ModeBasis& basis, int node,
               std::vector<RJet>& yj, std::vector<RJet>& yxj) {
  int N = basis.N;
  double t0 = flow.grid.node(node);
  yj.resize(N);
  yxj.resize(N);

  Vec disp(N);
  for (int m = 0; m < N; ++m) disp[m] = flow.y[node][m] - basis.xs[m];
  Vec dxv = grid_values(basis, Vec(derivative_op(basis) * mode_coefficients(basis, disp)));

  for (int m = 0; m < N; ++m) {
    // y' = b(t, y): raise the jet order one step at a time
    RJet y(flow.y[node][m], 0);
    for (int k = 0; k < kJetDepth; ++k) {
      RJet t = RJet::variable(t0, k);
      RJet rhs = spec.b.eval_jet(t, y, basis.L);
      y.depth = k + 1;
      y.c[k + 1] = rhs.c[k] / double(k + 1);
    }
    yj[m] = y;

    // (dy/dx)' = (d_x b)(t, y) dy/dx
    RJet yx(1.0 + dxv[m].real(), 0);
    for (int k = 0; k < kJetDepth; ++k) {
      RJet t = RJet::variable(t0, k);
      RJet yk = yj[m];
      yk.depth = k;
      RJet rhs = spec.b.eval_dx_jet(t, yk, basis.L) * yx;
      yx.depth = k + 1;
      yx.c[k + 1] = rhs.c[k] / double(k + 1);
    }
    yxj[m] = yx;
  }
}

}  // namespace

ModelCoefficients reduce_to_model(const SpacetimeSpec& spec, const ShiftFlow& flow,
                                  const ModeBasis& basis, const TimeGrid& grid) {
  ModelCoefficients mc;
  mc.basis = basis;
  mc.grid = grid;
  mc.mu = spec.mu;
  mc.mu_prime = spec.mu_prime;
  mc.delta_rate = std::min(spec.mu, spec.mu_prime - 1.0);
  int N = basis.N;
  int n = grid.n_nodes;
  mc.ghalf_inv.resize(n);
  mc.pot.resize(n);
  mc.dens.resize(n);
  mc.damp.resize(n);

  std::vector<RJet> yj(N), yxj(N);
  for (int i = 0; i < n; ++i) {
    RJet tj = RJet::variable(grid.node(i));
    if (!flow.trivial) flow_jets(spec, flow, basis, i, yj, yxj);

    for (auto* arr : {&mc.ghalf_inv[i], &mc.pot[i], &mc.dens[i], &mc.damp[i]})
      for (auto& v : *arr) v.resize(N);

    for (int m = 0; m < N; ++m) {
      RJet xj = flow.trivial ? RJet(basis.xs[m], kJetDepth) : yj[m];
      RJet chat = spec.c.eval_jet(tj, xj, basis.L);
      RJet hhat = spec.h.eval_jet(tj, xj, basis.L);
      if (!flow.trivial) hhat = yxj[m] * yxj[m] * hhat;
      RJet vhat = spec.V.eval_jet(tj, xj, basis.L);

      require(chat.value() > 0, errc::invalid_geometry, "lapse must stay positive");
      require(hhat.value() > 0, errc::invalid_geometry, "spatial metric must stay positive");

      RJet htilde = hhat * pow(chat, -2.0);
      RJet vtilde = chat * chat * vhat;
      RJet densj = sqrt(htilde);
      RJet ghinv = inverse(densj);
      RJet dampj = densj.d() / densj;  // r = d/dt log(density); one order shorter
      for (int k = 0; k <= kJetDepth; ++k) {
        mc.ghalf_inv[i][k][m] = ghinv.derivative(k);
        mc.pot[i][k][m] = vtilde.derivative(k);
        mc.dens[i][k][m] = densj.derivative(k);
        mc.damp[i][k][m] = k <= dampj.depth ? dampj.derivative(k) : 0.0;
      }
    }
  }

  mc.scalar_damping = true;
  for (int i = 0; i < n && mc.scalar_damping; ++i) {
    double lo = mc.damp[i][0].minCoeff(), hi = mc.damp[i][0].maxCoeff();
    if (hi - lo > 1e-12 * std::max(1.0, std::abs(hi) + std::abs(lo))) mc.scalar_damping = false;
  }

  auto asymptotic_fields = [&](bool out, RVec& ghinv_a, RVec& pot_a, RVec& dens_a) {
    const RVec& ya = out ? flow.y_out : flow.y_in;
    Vec disp(N);
    for (int m = 0; m < N; ++m) disp[m] = ya[m] - basis.xs[m];
    Vec dxv = grid_values(basis, Vec(derivative_op(basis) * mode_coefficients(basis, disp)));
    ghinv_a.resize(N);
    pot_a.resize(N);
    dens_a.resize(N);
    for (int m = 0; m < N; ++m) {
      double yp = flow.trivial ? 1.0 : 1.0 + dxv[m].real();
      double ca = spec.c.limit(out, ya[m], basis.L);
      double ha = yp * yp * spec.h.limit(out, ya[m], basis.L);
      double va = spec.V.limit(out, ya[m], basis.L);
      require(ca > 0 && ha > 0, errc::invalid_geometry, "asymptotic data must stay positive");
      double htilde = ha / (ca * ca);
      ghinv_a[m] = 1.0 / std::sqrt(htilde);
      pot_a[m] = ca * ca * va;
      dens_a[m] = std::sqrt(htilde);
    }
  };
  asymptotic_fields(true, mc.ghalf_inv_out, mc.pot_out, mc.dens_out);
  asymptotic_fields(false, mc.ghalf_inv_in, mc.pot_in, mc.dens_in);

  mc.a_out = assemble_model_op(basis, mc.ghalf_inv_out, mc.pot_out, mc.dens_out,
                               make_weight(basis, mc.dens_out));
  mc.a_in = assemble_model_op(basis, mc.ghalf_inv_in, mc.pot_in, mc.dens_in,
                              make_weight(basis, mc.dens_in));

  mc.mass_floor_sq = check_positivity(mc);
  return mc;
}

Mat assemble_model_op(const ModeBasis& basis, const RVec& ghalf_inv, const RVec& pot,
                      const RVec& dens, const Weight& W) {
  Mat D = derivative_op(basis);
  Mat F = Mat(D.adjoint()) * mult_op(basis, ghalf_inv) * D +
          mult_op(basis, RVec(pot.cwiseProduct(dens)));
  return W.Winv * F;
}

Mat ModelCoefficients::form_at(int node, int order) const {
  Mat D = derivative_op(basis);
  int N = basis.N;
  RVec vw = RVec::Zero(N);
  double binom = 1;
  for (int j = 0; j <= order; ++j) {
    if (j > 0) binom *= double(order - j + 1) / j;
    vw += binom * pot[node][j].cwiseProduct(dens[node][order - j]);
  }
  return Mat(D.adjoint()) * mult_op(basis, ghalf_inv[node][order]) * D + mult_op(basis, vw);
}

Mat ModelCoefficients::a_at(int node, int order) const {
  const Weight& W = weight_at(node);
  std::vector<Mat> deriv(order + 1);
  for (int k = 0; k <= order; ++k) {
    Mat rhs = form_at(node, k);
    double binom = 1;
    for (int j = 1; j <= k; ++j) {
      binom *= double(k - j + 1) / j;
      rhs -= binom * mult_op(basis, dens[node][j]) * deriv[k - j];
    }
    deriv[k] = W.Winv * rhs;
  }
  return deriv[order];
}

Vec ModelCoefficients::r_samples_at(int node, int order) const {
  return damp[node][order].cast<cplx>();
}

Mat ModelCoefficients::r_op_at(int node, int order) const {
  return mult_op(basis, damp[node][order]);
}

const Weight& ModelCoefficients::weight_at(int node) const {
  auto it = weight_cache_.find(node);
  if (it == weight_cache_.end())
    it = weight_cache_.emplace(node, make_weight(basis, dens[node][0])).first;
  return it->second;
}

Weight ModelCoefficients::weight_out() const { return make_weight(basis, dens_out); }
Weight ModelCoefficients::weight_in() const { return make_weight(basis, dens_in); }

OpFamily ModelCoefficients::a_family(int order) const {
  OpFamily f;
  f.grid = grid;
  f.mats.resize(grid.n_nodes);
  for (int i = 0; i < grid.n_nodes; ++i) f.mats[i] = a_at(i, order);
  return f;
}

OpFamily ModelCoefficients::r_family(int order) const {
  OpFamily f;
  f.grid = grid;
  f.mats.resize(grid.n_nodes);
  for (int i = 0; i < grid.n_nodes; ++i) f.mats[i] = r_op_at(i, order);
  return f;
}

double check_positivity(const ModelCoefficients& model) {
  Weight wo = model.weight_out();
  Weight wi = model.weight_in();
  WeightedEig eo = weighted_eig(model.a_out, wo);
  WeightedEig ei = weighted_eig(model.a_in, wi);
  double m2 = std::min(eo.evals.minCoeff(), ei.evals.minCoeff());
  require(m2 > 0, errc::positivity_violated,
          "asymptotic operator not massive (min eigenvalue " + std::to_string(m2) + ")");
  return m2;
}

TdReport verify_td_decay(const ModelCoefficients& model, double fit_t_lo, double fit_t_hi,
                         int max_samples) {
  TdReport rep;
  const TimeGrid& g = model.grid;
  require(g.t_max >= 10.0 * std::max(1.0, fit_t_lo) || g.t_max >= 0.99 * fit_t_hi,
          errc::insufficient_samples, "time grid too short for a decade of decay");

  int count = std::min(max_samples, g.n_nodes);
  auto collect = [&](bool out, const Mat& a_ref) {
    std::vector<std::pair<double, double>> vals;
    double lo = out ? fit_t_lo : -std::min(fit_t_hi, std::abs(g.t_min));
    double hi = out ? std::min(fit_t_hi, g.t_max) : -fit_t_lo;
    for (int s = 0; s < count; ++s) {
      double t = lo + (hi - lo) * s / (count - 1);
      if (!g.contains(t)) continue;
      int i = g.index_near(t);
      vals.push_back({std::abs(g.node(i)), op_norm(model.a_at(i) - a_ref)});
    }
    return vals;
  };

  auto fit_or_exact = [&](std::vector<std::pair<double, double>> vals) {
    double vmax = 0;
    for (auto& v : vals) vmax = std::max(vmax, v.second);
    if (vmax <= kExactFloor) {
      DecayFit f;
      f.exact = true;
      f.sentinel_inf = true;
      f.exponent = std::numeric_limits<double>::infinity();
      f.r_squared = 1.0;
      return f;
    }
    return fit_time_decay(vals);
  };

  rep.fits["a_out"] = fit_or_exact(collect(true, model.a_out));
  rep.fits["a_in"] = fit_or_exact(collect(false, model.a_in));

  std::vector<std::pair<double, double>> rv;
  for (int s = 0; s < count; ++s) {
    double t = fit_t_lo + (std::min(fit_t_hi, g.t_max) - fit_t_lo) * s / (count - 1);
    if (!g.contains(t)) continue;
    int i = g.index_near(t);
    rv.push_back({std::abs(g.node(i)), model.damp[i][0].cwiseAbs().maxCoeff() + 1e-300});
  }
  rep.fits["r"] = fit_or_exact(rv);

  rep.exact = rep.fits["a_out"].exact && rep.fits["a_in"].exact && rep.fits["r"].exact;
  double slack = 0.2;
  rep.a_rate_ok = rep.exact || (rep.fits["a_out"].exponent >= model.delta_rate - slack &&
                                rep.fits["a_in"].exponent >= model.delta_rate - slack);
  rep.r_rate_ok = rep.exact || rep.fits["r"].exponent >= 1.0 + model.delta_rate - slack;
  return rep;
}

}  // namespace kgscat
